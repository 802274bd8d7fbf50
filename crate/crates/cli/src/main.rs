fn main() {
    std::process::exit(synthbt_cli::main_with(std::env::args_os()));
}
