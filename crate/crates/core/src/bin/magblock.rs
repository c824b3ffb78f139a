fn main() {
    std::process::exit(magblock::cli::main_with(std::env::args_os()));
}
