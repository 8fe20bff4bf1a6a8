fn main() {
    std::process::exit(cmcflow::cli::main_with(std::env::args_os()));
}
