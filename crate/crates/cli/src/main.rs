fn main() {
    std::process::exit(ep_atlas_cli::main_with_args(std::env::args_os()));
}
