fn main() {
    std::process::exit(kslope::cli::run_from_args(std::env::args_os()));
}
