fn main() {
    std::process::exit(fracbubble::run(std::env::args_os()));
}
