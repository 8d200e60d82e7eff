use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sscag::io::{
    load_cube, load_ground_truth, load_labels, load_raw_bip, render_map, save_cube,
    save_ground_truth, save_labels, save_metadata, RawSample,
};
use sscag::metrics::{evaluate, Evaluation};
use sscag::{run_sscag, synth_scene, ClusteringResult, SceneSpec, SscagParams};

use crate::error::{CliError, Result};

pub const LABELS_FILE: &str = "labels.csv";
pub const MAP_FILE: &str = "map.ppm";
pub const METADATA_FILE: &str = "run.csv";
pub const CUBE_FILE: &str = "cube.hsic";
pub const GROUND_TRUTH_FILE: &str = "gt.pgm";

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: PathBuf,
    pub ground_truth: Option<PathBuf>,
    pub params: SscagParams,
    pub out_dir: PathBuf,
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

/// Clusters the input cube and writes labels, a color map and run metadata
/// into the output directory.
pub fn cmd_cluster(config: &RunConfig) -> Result<ClusteringResult> {
    let cube = load_cube(&config.input)?;
    let shape = (cube.height(), cube.width());
    let gt = config
        .ground_truth
        .as_ref()
        .map(|p| load_ground_truth(p, Some(shape)))
        .transpose()?;
    let result = run_sscag(&cube, gt.as_ref(), &config.params)?;

    create_dir(&config.out_dir)?;
    save_labels(&result.labels, config.out_dir.join(LABELS_FILE))?;
    let mask = gt.as_ref().map(|g| g.mask());
    render_map(
        &result.labels,
        shape.0,
        shape.1,
        mask.as_deref(),
        config.out_dir.join(MAP_FILE),
    )?;
    save_metadata(&result, config.out_dir.join(METADATA_FILE))?;
    Ok(result)
}

/// Writes a synthetic cube and its ground truth; returns both paths.
pub fn cmd_synth(spec: &SceneSpec, seed: u64, out_dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let (cube, gt) = synth_scene(spec, seed)?;
    create_dir(out_dir)?;
    let cube_path = out_dir.join(CUBE_FILE);
    let gt_path = out_dir.join(GROUND_TRUTH_FILE);
    save_cube(&cube, &cube_path)?;
    save_ground_truth(&gt, &gt_path)?;
    Ok((cube_path, gt_path))
}

/// Scores a label file against ground truth.
pub fn cmd_eval(labels: &Path, ground_truth: &Path) -> Result<Evaluation> {
    let pred = load_labels(labels)?;
    let gt = load_ground_truth(ground_truth, None)?;
    if pred.len() != gt.labels().len() {
        return Err(CliError::Core(sscag::Error::InvalidData(format!(
            "{} holds {} labels but the ground truth has {} pixels",
            labels.display(),
            pred.len(),
            gt.labels().len()
        ))));
    }
    Ok(evaluate(&pred, gt.labels())?)
}

/// `metric,value` lines followed by one `map,<cluster>,<class>` line per
/// predicted cluster (`-` when the cluster is unmatched).
pub fn format_evaluation(eval: &Evaluation) -> String {
    let mut out = String::new();
    writeln!(out, "oa,{}", eval.overall_accuracy).unwrap();
    writeln!(out, "aa,{}", eval.average_accuracy).unwrap();
    writeln!(out, "kappa,{}", eval.kappa).unwrap();
    if eval.kappa < 0.0 {
        writeln!(out, "kappa_negative,true").unwrap();
    }
    for (cluster, class) in &eval.alignment.mapping {
        match class {
            Some(c) => writeln!(out, "map,{cluster},{c}").unwrap(),
            None => writeln!(out, "map,{cluster},-").unwrap(),
        }
    }
    out
}

/// Converts a headerless band-interleaved-by-pixel file into an `HSIC` cube.
pub fn cmd_convert(
    raw: &Path,
    shape: (usize, usize, usize),
    sample: RawSample,
    out: &Path,
) -> Result<()> {
    let cube = load_raw_bip(raw, shape.0, shape.1, shape.2, sample)?;
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    save_cube(&cube, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use sscag::io::{decode_ppm, load_ground_truth};

    fn scene(dir: &Path, noise: f64) -> (PathBuf, PathBuf) {
        let spec = SceneSpec {
            noise,
            ..SceneSpec::blocks(10, 10, 4, 2)
        };
        cmd_synth(&spec, 3, dir).unwrap()
    }

    fn config(dir: &Path, cube: PathBuf, gt: Option<PathBuf>) -> RunConfig {
        let mut params = SscagParams::new(2, 12, 0.5);
        params.scales = vec![3, 5];
        RunConfig {
            input: cube,
            ground_truth: gt,
            params,
            out_dir: dir.join("run"),
        }
    }

    #[test]
    fn noiseless_scene_scores_perfectly() {
        let dir = tempfile::tempdir().unwrap();
        let (cube, gt) = scene(dir.path(), 0.0);
        let res = cmd_cluster(&config(dir.path(), cube, Some(gt.clone()))).unwrap();
        assert_eq!(res.evaluation.unwrap().overall_accuracy, 1.0);

        let out = dir.path().join("run");
        let meta = fs::read_to_string(out.join(METADATA_FILE)).unwrap();
        assert!(meta.lines().any(|l| l == "oa,1"));
        assert!(meta.lines().any(|l| l == "seed,0"));
        let (h, w, rgb) = decode_ppm(&fs::read(out.join(MAP_FILE)).unwrap()).unwrap();
        assert_eq!((h, w, rgb.len()), (10, 10, 300));

        let eval = cmd_eval(&out.join(LABELS_FILE), &gt).unwrap();
        assert_eq!(eval.overall_accuracy, 1.0);
        let text = format_evaluation(&eval);
        assert!(text.starts_with("oa,1\naa,1\nkappa,1\n"));
        assert_eq!(text.lines().filter(|l| l.starts_with("map,")).count(), 2);
    }

    #[test]
    fn missing_input_names_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.hsic");
        let err = cmd_cluster(&config(dir.path(), missing, None)).unwrap_err();
        assert_eq!(err.exit_code(), crate::error::EXIT_DATA);
        assert!(err.report().contains("nope.hsic"));
    }

    #[test]
    fn synth_writes_loadable_files() {
        let dir = tempfile::tempdir().unwrap();
        let (cube, gt) = scene(dir.path(), 0.05);
        let cube = load_cube(cube).unwrap();
        let gt = load_ground_truth(gt, Some((10, 10))).unwrap();
        assert_eq!(cube.bands(), 4);
        assert_eq!(gt.classes(), 2);
    }

    #[test]
    fn eval_rejects_length_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let (_, gt) = scene(dir.path(), 0.0);
        let labels = dir.path().join("short.csv");
        save_labels(&[1, 2, 1], &labels).unwrap();
        let err = cmd_eval(&labels, &gt).unwrap_err();
        assert_eq!(err.exit_code(), crate::error::EXIT_DATA);
    }

    #[test]
    fn convert_raw_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let raw = dir.path().join("in.raw");
        fs::write(&raw, [0u8, 10, 20, 30, 40, 50]).unwrap();
        let out = dir.path().join("nested/out.hsic");
        cmd_convert(&raw, (1, 3, 2), RawSample::U8, &out).unwrap();
        let cube = load_cube(&out).unwrap();
        assert_eq!(cube.as_slice(), &[0.0, 10.0, 20.0, 30.0, 40.0, 50.0]);
        let err = cmd_convert(&raw, (2, 3, 2), RawSample::U8, &out).unwrap_err();
        assert_eq!(err.exit_code(), crate::error::EXIT_DATA);
    }
}
