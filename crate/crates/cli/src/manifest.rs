//! Per-stage manifests: each stage directory records the hash of every
//! input it consumed, so downstream runs can detect stale artifacts.
//! Manifests store file names only (never absolute paths) so that two runs
//! in different locations produce identical bytes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use aspect_topics::persist::file_hash;

#[derive(Debug, Serialize, Deserialize)]
pub struct StageManifest {
    pub stage: String,
    pub inputs: Vec<ManifestEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub hash: String,
}

/// Write `<stage_dir>/manifest.json` recording the given input files.
pub fn write_manifest(stage: &str, stage_dir: &Path, inputs: &[&Path]) -> std::io::Result<()> {
    let mut entries = Vec::with_capacity(inputs.len());
    for path in inputs {
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or("?")
            .to_string();
        let hash = file_hash(path).map_err(std::io::Error::other)?;
        entries.push(ManifestEntry { name, hash });
    }
    let manifest = StageManifest {
        stage: stage.to_string(),
        inputs: entries,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(stage_dir.join("manifest.json"), text)
}

/// Compare a stage's recorded input hashes with the current files; returns
/// one warning per stale entry. `resolve` maps a recorded file name back to
/// its current path.
pub fn staleness_warnings(
    stage_dir: &Path,
    resolve: impl Fn(&str) -> Option<std::path::PathBuf>,
) -> Vec<String> {
    let manifest_path = stage_dir.join("manifest.json");
    let Ok(text) = std::fs::read_to_string(&manifest_path) else {
        return Vec::new();
    };
    let Ok(manifest) = serde_json::from_str::<StageManifest>(&text) else {
        return vec![format!("{}: unreadable manifest", manifest_path.display())];
    };
    let mut warnings = Vec::new();
    for entry in &manifest.inputs {
        if let Some(path) = resolve(&entry.name) {
            match file_hash(&path) {
                Ok(h) if h == entry.hash => {}
                Ok(_) => warnings.push(format!(
                    "stage '{}' was built from a different version of {}",
                    manifest.stage, entry.name
                )),
                Err(_) => warnings.push(format!(
                    "stage '{}' input {} no longer exists",
                    manifest.stage, entry.name
                )),
            }
        }
    }
    warnings
}
