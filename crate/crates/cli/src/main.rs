fn main() {
    std::process::exit(nilspherical_cli::main_with_args(std::env::args()));
}
