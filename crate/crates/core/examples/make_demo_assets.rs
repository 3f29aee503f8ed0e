//! Writes the demo meshes and config: `cargo run --example make_demo_assets -- [DIR]`.

fn main() -> std::io::Result<()> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "configs/demo".into());
    let path = cadsynth::demo::write_demo(std::path::Path::new(&dir), 20, 7)?;
    println!("wrote {}", path.display());
    Ok(())
}
