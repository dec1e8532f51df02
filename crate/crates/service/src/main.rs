fn main() {
    std::process::exit(circles_service::cli::run(std::env::args_os()));
}
