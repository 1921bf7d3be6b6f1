fn main() {
    std::process::exit(ustree_cli::run(std::env::args_os()));
}
