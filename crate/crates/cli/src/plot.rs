//! `plot-data`: frontier tables for gnuplot or any CSV reader.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use ratesplit::region::RateRegionResult;

use crate::io::write_atomic;

pub fn load_region(path: &Path) -> anyhow::Result<RateRegionResult> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    RateRegionResult::from_json(&text).with_context(|| format!("{} is not a JSON region file", path.display()))
}

/// Space-separated `R1 R2 u2` rows of the Pareto frontier, increasing in R1.
pub fn frontier_table(r: &RateRegionResult) -> String {
    let mut out = format!("# {} frontier\n# R1 R2 u2\n", r.strategy);
    for f in &r.pareto_frontier {
        out.push_str(&format!("{} {} {}\n", f.r1, f.r2, r.points[f.index].weights[1]));
    }
    out
}

/// One row per frontier rank with an `R1 R2` column pair per region; shorter
/// frontiers are padded with NaN.
pub fn combined_table(regions: &[RateRegionResult]) -> String {
    let mut out = String::from("#");
    for r in regions {
        out.push_str(&format!(" {0}_R1 {0}_R2", r.strategy));
    }
    out.push('\n');
    let rows = regions.iter().map(|r| r.pareto_frontier.len()).max().unwrap_or(0);
    for i in 0..rows {
        let cells: Vec<String> = regions
            .iter()
            .map(|r| match r.pareto_frontier.get(i) {
                Some(f) => format!("{} {}", f.r1, f.r2),
                None => "NaN NaN".to_string(),
            })
            .collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    out
}

/// Writes `<stem>.frontier.dat` per input and `combined.dat`. All inputs
/// must come from the same setting.
pub fn emit_plot_data(files: &[PathBuf], out_dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    if files.is_empty() {
        bail!("no region files given");
    }
    let regions = files.iter().map(|f| load_region(f)).collect::<anyhow::Result<Vec<_>>>()?;
    for (r, f) in regions.iter().zip(files).skip(1) {
        if !regions[0].scenario.same_setting(&r.scenario) {
            bail!("{} comes from a different scenario than {}", f.display(), files[0].display());
        }
    }
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for (r, f) in regions.iter().zip(files) {
        let stem = f.file_stem().unwrap_or_default().to_string_lossy();
        let path = out_dir.join(format!("{stem}.frontier.dat"));
        write_atomic(&path, frontier_table(r).as_bytes())?;
        written.push(path);
    }
    let path = out_dir.join("combined.dat");
    write_atomic(&path, combined_table(&regions).as_bytes())?;
    written.push(path);
    Ok(written)
}
