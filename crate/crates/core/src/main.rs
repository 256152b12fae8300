fn main() {
    env_logger::init();
    std::process::exit(cnotsim::cli::run(std::env::args_os()));
}
