fn main() {
    std::process::exit(dsa_cli::dispatch(std::env::args_os()));
}
