fn main() {
    println!("bidisk");
}
