fn main() {
    std::process::exit(wva_lab::run(std::env::args_os()));
}
