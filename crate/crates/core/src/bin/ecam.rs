fn main() {
    std::process::exit(ensemble_cam::cli::run(std::env::args_os()));
}
