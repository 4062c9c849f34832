fn main() {
    std::process::exit(ktfr_cli::run_cli(std::env::args_os()));
}
