fn main() {
    std::process::exit(lrsdp_cli::run(std::env::args_os()));
}
