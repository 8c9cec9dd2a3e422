fn main() {
    std::process::exit(ama_tal::cli::run(std::env::args_os()));
}
