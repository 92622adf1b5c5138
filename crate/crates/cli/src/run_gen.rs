//! `gen`: write a synthetic dataset with planted structure.

use std::path::PathBuf;

use clap::Args;
use mmfs::{generate, Error, Result, SynthConfig};
use serde::Serialize;

use crate::output::{self, with_suffix};

#[derive(Args, Clone, Debug, Serialize)]
pub struct GenArgs {
    /// Number of instances (rows).
    #[arg(long, default_value_t = 500)]
    pub instances: u32,

    /// Number of informative features.
    #[arg(long, default_value_t = 2)]
    pub informative: u32,

    /// Duplicate columns as a comma list of 1-based informative ids
    /// (`1,1,1` plants three copies of the first informative feature);
    /// `none` plants no duplicates.
    #[arg(long, default_value = "1,1,1")]
    pub duplicates_of: String,

    /// Number of sparse noise features.
    #[arg(long, default_value_t = 50)]
    pub noise: u32,

    /// Target stored values per instance; unset keeps every noise draw.
    #[arg(long)]
    pub nnz_per_instance: Option<f64>,

    /// Standard deviation of the additive label noise.
    #[arg(long, default_value_t = 0.1)]
    pub label_noise: f64,

    /// Output path stem; the dataset gets a `.svml` suffix and the ground
    /// truth a `.manifest.json` suffix.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_duplicates(spec: &str, n_informative: u32) -> Result<Vec<u32>> {
    let spec = spec.trim();
    if spec.eq_ignore_ascii_case("none") || spec.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for item in spec.split(',') {
        let item = item.trim();
        let id: u32 = item.parse().map_err(|_| {
            Error::InvalidArgument(format!("bad duplicate source `{item}`; expected a 1-based id"))
        })?;
        if id == 0 || id > n_informative {
            return Err(Error::InvalidArgument(format!(
                "duplicate source {id} is outside the informative range 1..={n_informative}"
            )));
        }
        out.push(id - 1);
    }
    Ok(out)
}

pub fn run(args: &GenArgs, seed: u64) -> Result<()> {
    let run_config = output::run_config_value("gen", seed, args);
    let config = SynthConfig {
        n_instances: args.instances as usize,
        n_informative: args.informative,
        duplicates_of: parse_duplicates(&args.duplicates_of, args.informative)?,
        n_noise: args.noise,
        nnz_per_instance: args.nnz_per_instance,
        label_noise: args.label_noise,
        seed,
    };
    let (dataset, truth) = generate(&config)?;

    let mut buf = Vec::new();
    dataset
        .write_svmlight(&mut buf)
        .expect("writing to memory cannot fail");
    let data_text = format!(
        "{}{}",
        output::run_config_line(&run_config),
        String::from_utf8(buf).expect("datasets are UTF-8")
    );
    let manifest = output::json_text(&output::embed_run_config(truth.to_json(), &run_config));

    let data_path = with_suffix(&args.out, ".svml");
    output::write_file(&data_path, &data_text)?;
    output::write_file(&with_suffix(&args.out, ".manifest.json"), &manifest)?;

    eprintln!(
        "gen: {} instances x {} features ({} stored values) -> {}",
        dataset.n_instances(),
        dataset.n_features(),
        dataset.nnz(),
        data_path.display(),
    );
    Ok(())
}
