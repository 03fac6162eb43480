fn main() {
    est2d::cli_main();
}
