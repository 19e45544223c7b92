fn main() {
    stp_riccati::cli::init_logging();
    std::process::exit(stp_riccati::cli::run(std::env::args_os()));
}
