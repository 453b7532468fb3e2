fn main() { std::process::exit(ilc::cli::main_with_args(std::env::args_os())); }
