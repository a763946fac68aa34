fn main() {
    std::process::exit(granulex_workbench::cli::run(std::env::args_os()));
}
