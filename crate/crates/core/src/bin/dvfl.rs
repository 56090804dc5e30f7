fn main() {
    std::process::exit(dvfl::cli::main_with(std::env::args_os()));
}
