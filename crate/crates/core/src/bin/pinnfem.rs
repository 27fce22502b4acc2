fn main() {
    std::process::exit(pinnfem::cli::run_cli(std::env::args_os()));
}
