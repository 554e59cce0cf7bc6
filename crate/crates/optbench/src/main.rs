fn main() {
    std::process::exit(optbench::run_cli(std::env::args_os()));
}
