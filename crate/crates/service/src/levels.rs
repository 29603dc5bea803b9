use std::path::Path;

use serde::Serialize;
use vtools_core::bundled::{self, Category};
use vtools_core::level::{LevelSpec, PairDoc};
use vtools_core::LevelError;

/// A level as served: the original document bytes and its parsed form.
#[derive(Debug)]
pub struct ServedLevel {
    pub document: Vec<u8>,
    pub spec: LevelSpec,
    pub category: Option<&'static str>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelSummary {
    pub name: String,
    pub description: Option<String>,
    pub time_limit: f64,
    pub category: Option<&'static str>,
    pub pair: Option<PairDoc>,
}

/// Read-only level catalogue, in serving order.
#[derive(Debug, Default)]
pub struct LevelStore {
    levels: Vec<ServedLevel>,
}

impl LevelStore {
    pub fn bundled() -> Result<LevelStore, LevelError> {
        let levels = bundled::LEVELS
            .iter()
            .map(|b| {
                Ok(ServedLevel {
                    document: b.document.as_bytes().to_vec(),
                    spec: b.load()?,
                    category: Some(match b.category {
                        Category::Archetype => "archetype",
                        Category::Calibration => "calibration",
                    }),
                })
            })
            .collect::<Result<_, LevelError>>()?;
        Ok(LevelStore { levels })
    }

    /// Every `*.json` document in `dir`, sorted by file name.
    pub fn from_dir(dir: &Path) -> Result<LevelStore, String> {
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| format!("{}: {e}", dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let mut levels = Vec::new();
        for p in paths {
            let document = std::fs::read(&p).map_err(|e| format!("{}: {e}", p.display()))?;
            let spec = LevelSpec::load(&document).map_err(|e| format!("{}: {e}", p.display()))?;
            if levels.iter().any(|l: &ServedLevel| l.spec.name == spec.name) {
                return Err(format!("{}: duplicate level name `{}`", p.display(), spec.name));
            }
            levels.push(ServedLevel { document, spec, category: None });
        }
        Ok(LevelStore { levels })
    }

    pub fn get(&self, name: &str) -> Option<&ServedLevel> {
        self.levels.iter().find(|l| l.spec.name == name)
    }

    pub fn names(&self) -> Vec<String> {
        self.levels.iter().map(|l| l.spec.name.clone()).collect()
    }

    pub fn summaries(&self) -> Vec<LevelSummary> {
        self.levels
            .iter()
            .map(|l| LevelSummary {
                name: l.spec.name.clone(),
                description: l.spec.description.clone(),
                time_limit: l.spec.time_limit,
                category: l.category,
                pair: l.spec.pair.clone(),
            })
            .collect()
    }
}
