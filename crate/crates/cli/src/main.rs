fn main() {
    std::process::exit(scnsim_cli::main_with(std::env::args_os()));
}
