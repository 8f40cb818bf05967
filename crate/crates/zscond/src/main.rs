fn main() {
    std::process::exit(zscond::cli::run(std::env::args_os()));
}
