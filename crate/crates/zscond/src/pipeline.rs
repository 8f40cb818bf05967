//! Anchors → Boutroux differential → traced spectrum, optionally aimed at a
//! connectivity class.
//!
//! A Boutroux solve does not know which class it lands in. To target a
//! class we solve every zero layout whose connectivity dominates the
//! requested one, trace each, and keep the valid spectrum of least
//! intensity.

use rayon::prelude::*;
use serde::Serialize;

use crate::boutroux::{solve_boutroux, BoutrouxSolution, NewtonOptions, Seed, ZeroStructure};
use crate::error::{Error, Result};
use crate::geom::{connectivity_of, is_admissible, AnchorSet, ConnectivityMatrix, PolyContinuum};
use crate::tracer::{build_critical_graph, extract_zs_spectrum, CriticalGraph, TraceOptions};

#[derive(Clone, Debug, Serialize)]
pub struct Traced {
    pub solution: BoutrouxSolution,
    pub graph: CriticalGraph,
    pub spectrum: PolyContinuum,
    pub connectivity: ConnectivityMatrix,
    pub intensity: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CandidateOutcome {
    pub structure: ZeroStructure,
    pub intensity: Option<f64>,
    pub status: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassSolution {
    pub best: Traced,
    pub candidates: Vec<CandidateOutcome>,
}

pub fn trace_solution(e: &AnchorSet, solution: BoutrouxSolution, topts: &TraceOptions) -> Result<Traced> {
    let graph = build_critical_graph(&solution.qd, topts)?;
    if graph.escaped > 0 {
        return Err(Error::GraphInconsistency(format!("{} trajectories escaped", graph.escaped)));
    }
    if !graph.is_forest() {
        return Err(Error::GraphInconsistency("critical graph has a cycle in ℍ".into()));
    }
    let spectrum = extract_zs_spectrum(&graph)?;
    let connectivity = connectivity_of(&spectrum, e)?;
    if !is_admissible(&spectrum, e)? {
        return Err(Error::GraphInconsistency("spectrum has a component without two anchors or ground".into()));
    }
    let intensity = solution.qd.residue_intensity();
    Ok(Traced { solution, graph, spectrum, connectivity, intensity })
}

/// Solve from one seed and trace.
pub fn solve_and_trace(e: &AnchorSet, seed: Seed, nopts: &NewtonOptions, topts: &TraceOptions) -> Result<Traced> {
    let sol = solve_boutroux(e, seed, nopts)?;
    trace_solution(e, sol, topts)
}

/// Every admissible connectivity matrix dominating `m`.
pub fn dominating_classes(m: &ConnectivityMatrix) -> Vec<ConnectivityMatrix> {
    let n = m.n();
    let mut out = Vec::new();
    // label per anchor; label 0 is "grounded"
    fn rec(i: usize, n: usize, labels: &mut Vec<usize>, next: usize, out: &mut Vec<Vec<usize>>) {
        if i == n {
            out.push(labels.clone());
            return;
        }
        for l in 0..=next {
            labels.push(l);
            rec(i + 1, n, labels, if l == next { next + 1 } else { next }, out);
            labels.pop();
        }
    }
    let mut all = Vec::new();
    rec(0, n, &mut Vec::new(), 1, &mut all);
    for labels in all {
        let max = *labels.iter().max().unwrap();
        let ok = (1..=max).all(|l| labels.iter().filter(|&&x| x == l).count() != 1);
        if !ok {
            continue;
        }
        let grounded: Vec<bool> = (0..=max).map(|l| l == 0).collect();
        let c = ConnectivityMatrix::from_labels(&labels, &grounded);
        if c.dominates(m) && !out.contains(&c) {
            out.push(c);
        }
    }
    out
}

/// Minimal-intensity ZS spectrum among layouts at least as connected as `m`.
pub fn solve_in_class(
    e: &AnchorSet,
    m: &ConnectivityMatrix,
    nopts: &NewtonOptions,
    topts: &TraceOptions,
) -> Result<ClassSolution> {
    solve_over(e, m, false, nopts, topts)
}

/// Same, restricted to spectra whose connectivity is exactly `m`.
pub fn solve_in_exact_class(
    e: &AnchorSet,
    m: &ConnectivityMatrix,
    nopts: &NewtonOptions,
    topts: &TraceOptions,
) -> Result<ClassSolution> {
    solve_over(e, m, true, nopts, topts)
}

fn solve_over(
    e: &AnchorSet,
    m: &ConnectivityMatrix,
    exact: bool,
    nopts: &NewtonOptions,
    topts: &TraceOptions,
) -> Result<ClassSolution> {
    if m.n() != e.len() {
        return Err(Error::InvalidConnectivity(format!(
            "matrix is for {} anchors, config has {}",
            m.n(),
            e.len()
        )));
    }
    let mut structures = Vec::new();
    let classes = if exact { vec![m.clone()] } else { dominating_classes(m) };
    for c in classes {
        structures.extend(ZeroStructure::candidates_for(e, &c)?);
    }
    let results: Vec<Result<Traced>> = structures
        .par_iter()
        .map(|s| {
            let t = solve_and_trace(e, Seed::Structure(s.clone()), nopts, topts)?;
            if t.intensity <= 0.0 {
                return Err(Error::GraphInconsistency("non-positive intensity".into()));
            }
            if !t.connectivity.dominates(m) || (exact && t.connectivity != *m) {
                return Err(Error::GraphInconsistency("traced spectrum lies outside the class".into()));
            }
            Ok(t)
        })
        .collect();
    let mut candidates = Vec::new();
    let mut best: Option<Traced> = None;
    for (s, r) in structures.into_iter().zip(results) {
        match r {
            Ok(t) => {
                candidates.push(CandidateOutcome { structure: s, intensity: Some(t.intensity), status: "ok".into() });
                if best.as_ref().is_none_or(|b| t.intensity < b.intensity) {
                    best = Some(t);
                }
            }
            Err(err) => candidates.push(CandidateOutcome { structure: s, intensity: None, status: err.to_string() }),
        }
    }
    match best {
        Some(best) => Ok(ClassSolution { best, candidates }),
        None => Err(Error::NoConvergence(candidates.len())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dominating_counts() {
        // N=2: classes are {grounded both}, {floating pair}
        let all = dominating_classes(&ConnectivityMatrix::empty(2));
        assert_eq!(all.len(), 2);
        let m12 = ConnectivityMatrix::from_rows(vec![vec![0, 0, 0], vec![0, 1, 1], vec![0, 1, 1]]).unwrap();
        assert_eq!(dominating_classes(&m12).len(), 2);
        // N=3: all grounded, one floating pair + ground (3 ways), floating triple
        assert_eq!(dominating_classes(&ConnectivityMatrix::empty(3)).len(), 5);
    }
}
