fn main() {
    std::process::exit(showme_service::cli::main_with_args(std::env::args_os()));
}
