fn main() {
    std::process::exit(pahomeo_cli::run(std::env::args_os()));
}
