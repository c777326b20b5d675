//! Run the full pipeline from a configuration and print the manifest.

use billiard_complexity::experiment::{execute, Command, ExperimentConfig};

fn main() {
    let dir = std::env::temp_dir().join("billiard-pipeline-example");
    let cfg = ExperimentConfig::from_toml(&format!(
        "seed = 2024\ntable = \"rhombus\"\nangle = \"seeded-random\"\nn_max = 20\noutput_dir = {:?}\n",
        dir.display().to_string()
    ))
    .expect("valid config");
    let manifest = execute(Command::Pipeline, &cfg).expect("pipeline runs");
    println!("{}", serde_json::to_string_pretty(&manifest).expect("serializable"));
    println!("{}", std::fs::read_to_string(dir.join("pipeline.json")).expect("written"));
}
