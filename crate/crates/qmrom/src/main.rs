fn main() {
    std::process::exit(qmrom::main_with(std::env::args_os()));
}
