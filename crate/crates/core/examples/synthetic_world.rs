//! Generates a clustered world, writes it in the CLI's input format, and
//! reads it back.

use baseselect::io::{parse_embeddings_csv, write_embeddings_csv, write_id_list};
use baseselect::synth::{generate_synthetic_world, SyntheticWorldConfig};

fn main() -> baseselect::Result<()> {
    let cfg =
        SyntheticWorldConfig { clusters: 4, classes_per_cluster: 10, novel_classes: 5, dim: 8, ..Default::default() };
    let world = generate_synthetic_world(&cfg)?;
    let dir = std::env::temp_dir().join("baseselect-synthetic-world");
    let path = dir.join("embeddings.csv");
    write_embeddings_csv(&path, &world.combined())?;
    write_id_list(dir.join("novel.txt"), &world.novel.ids().cloned().collect::<Vec<_>>())?;

    let back = parse_embeddings_csv(&path)?;
    assert_eq!(back, world.combined());
    println!("{} classes of dimension {} written to {}", back.len(), back.dim(), dir.display());
    for (id, cluster) in &world.novel_cluster {
        println!("  novel {id} drawn near cluster {cluster}");
    }
    Ok(())
}
