fn main() {
    std::process::exit(statbench::cli::main_with(std::env::args_os()));
}
