//! Planner for the legacy engine training toolchain. The plan lists
//! the external-tool invocations in order without executing anything;
//! running it is a separate, explicit step.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("box directory {0} contains no image/box pairs")]
    EmptyDirectory(String),
    #[error("unpaired files in {dir}: stems missing an image: {missing_image:?}; stems missing a box file: {missing_box:?}")]
    Unpaired {
        dir: String,
        missing_image: Vec<String>,
        missing_box: Vec<String>,
    },
    #[error("font properties file {0} does not exist")]
    MissingFontProps(String),
    #[error("language identifier must be non-empty")]
    EmptyLang,
    #[error("step {program:?} exited with status {status}")]
    StepFailed { program: String, status: i32 },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanStep {
    pub program: String,
    pub args: Vec<String>,
}

/// Ordered tool invocations ending in the combined traineddata file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingPlan {
    pub steps: Vec<PlanStep>,
    pub produced_artifacts: Vec<String>,
}

impl TrainingPlan {
    /// Render as one shell-like line per step.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, step) in self.steps.iter().enumerate() {
            out.push_str(&format!("{}. {} {}\n", i + 1, step.program, step.args.join(" ")));
        }
        out.push_str(&format!("produces: {}\n", self.produced_artifacts.join(" ")));
        out
    }
}

const IMAGE_EXTENSIONS: &[&str] = &["png", "pgm", "tif", "tiff"];

/// Plan the four-step training sequence over a directory of matched
/// image/box pairs: unicharset extraction (with font properties, also
/// yielding the .tr feature files), feature training, cluster
/// training, and the combine step producing `<lang>.traineddata`.
/// Purely a planner: nothing is executed and nothing is written.
pub fn plan_training(
    box_dir: &Path,
    lang: &str,
    font_props: &Path,
) -> Result<TrainingPlan, PlanError> {
    if lang.is_empty() {
        return Err(PlanError::EmptyLang);
    }
    if !font_props.is_file() {
        return Err(PlanError::MissingFontProps(font_props.display().to_string()));
    }

    let mut box_stems = BTreeSet::new();
    let mut image_stems = BTreeSet::new();
    let entries = std::fs::read_dir(box_dir).map_err(|source| PlanError::Io {
        path: box_dir.display().to_string(),
        source,
    })?;
    for entry in entries {
        let entry = entry.map_err(|source| PlanError::Io {
            path: box_dir.display().to_string(),
            source,
        })?;
        let path = entry.path();
        let (Some(stem), Some(ext)) = (
            path.file_stem().map(|s| s.to_string_lossy().into_owned()),
            path.extension().map(|e| e.to_string_lossy().to_lowercase()),
        ) else {
            continue;
        };
        if ext == "box" {
            box_stems.insert(stem);
        } else if IMAGE_EXTENSIONS.contains(&ext.as_str()) {
            image_stems.insert(stem);
        }
    }

    if box_stems.is_empty() && image_stems.is_empty() {
        return Err(PlanError::EmptyDirectory(box_dir.display().to_string()));
    }
    let missing_image: Vec<String> = box_stems.difference(&image_stems).cloned().collect();
    let missing_box: Vec<String> = image_stems.difference(&box_stems).cloned().collect();
    if !missing_image.is_empty() || !missing_box.is_empty() {
        return Err(PlanError::Unpaired {
            dir: box_dir.display().to_string(),
            missing_image,
            missing_box,
        });
    }

    let stems: Vec<String> = box_stems.into_iter().collect(); // sorted by BTreeSet
    let box_files: Vec<String> = stems.iter().map(|s| format!("{s}.box")).collect();
    let tr_files: Vec<String> = stems.iter().map(|s| format!("{s}.tr")).collect();
    let font_props_arg = font_props.display().to_string();

    let mut steps = Vec::new();
    // Unicharset extraction over all box files; with the font
    // properties it also yields the per-page .tr feature files.
    let mut args = vec!["-F".to_string(), font_props_arg.clone()];
    args.extend(box_files.clone());
    steps.push(PlanStep {
        program: "unicharset_extractor".into(),
        args,
    });
    // Feature training consumes the .tr files and the unicharset.
    let mut args = vec![
        "-F".to_string(),
        font_props_arg,
        "-U".to_string(),
        "unicharset".to_string(),
        "-O".to_string(),
        format!("{lang}.unicharset"),
    ];
    args.extend(tr_files.clone());
    steps.push(PlanStep {
        program: "mftraining".into(),
        args,
    });
    // Cluster training over the same feature files.
    steps.push(PlanStep {
        program: "cntraining".into(),
        args: tr_files.clone(),
    });
    // Combine everything into the traineddata bundle.
    steps.push(PlanStep {
        program: "combine_tessdata".into(),
        args: vec![format!("{lang}.")],
    });

    let mut produced_artifacts = vec!["unicharset".to_string()];
    produced_artifacts.extend(tr_files);
    produced_artifacts.extend([
        format!("{lang}.unicharset"),
        "inttemp".to_string(),
        "pffmtable".to_string(),
        "shapetable".to_string(),
        "normproto".to_string(),
        format!("{lang}.traineddata"),
    ]);

    Ok(TrainingPlan {
        steps,
        produced_artifacts,
    })
}

/// Execute a plan's steps in order inside `cwd`, stopping on the first
/// failure. Never run implicitly; callers opt in.
pub fn execute_plan(plan: &TrainingPlan, cwd: &Path) -> Result<(), PlanError> {
    for step in &plan.steps {
        let status = Command::new(&step.program)
            .args(&step.args)
            .current_dir(cwd)
            .status()
            .map_err(|source| PlanError::Io {
                path: step.program.clone(),
                source,
            })?;
        if !status.success() {
            return Err(PlanError::StepFailed {
                program: step.program.clone(),
                status: status.code().unwrap_or(-1),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn training_dir(pairs: &[&str], extras: &[&str]) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        for stem in pairs {
            std::fs::write(dir.path().join(format!("{stem}.png")), b"img").unwrap();
            std::fs::write(dir.path().join(format!("{stem}.box")), "\u{0B95} 1 2 3 4 0\n").unwrap();
        }
        for name in extras {
            std::fs::write(dir.path().join(name), b"x").unwrap();
        }
        dir
    }

    fn font_props() -> tempfile::NamedTempFile {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), "atam 0 0 0 0 0\n").unwrap();
        f
    }

    #[test]
    fn four_step_plan_for_two_pairs() {
        let dir = training_dir(&["page1", "page2"], &["notes.txt"]);
        let fp = font_props();
        let plan = plan_training(dir.path(), "atam", fp.path()).unwrap();
        assert_eq!(plan.steps.len(), 4);
        assert_eq!(plan.steps[0].program, "unicharset_extractor");
        assert_eq!(plan.steps[1].program, "mftraining");
        assert_eq!(plan.steps[2].program, "cntraining");
        assert_eq!(plan.steps[3].program, "combine_tessdata");
        assert_eq!(plan.produced_artifacts.last().unwrap(), "atam.traineddata");
        assert!(plan.steps[0].args.contains(&"page1.box".to_string()));
        assert!(plan.steps[0].args.contains(&"page2.box".to_string()));
        assert!(plan.steps[2].args.contains(&"page1.tr".to_string()));
    }

    #[test]
    fn plan_is_deterministic_and_pure() {
        let dir = training_dir(&["b", "a", "c"], &[]);
        let fp = font_props();
        let listing = |p: &Path| {
            let mut names: Vec<String> = std::fs::read_dir(p)
                .unwrap()
                .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
                .collect();
            names.sort();
            names
        };
        let before = listing(dir.path());
        let one = plan_training(dir.path(), "atam", fp.path()).unwrap();
        let two = plan_training(dir.path(), "atam", fp.path()).unwrap();
        assert_eq!(one, two);
        assert_eq!(listing(dir.path()), before, "planner touched the directory");
        // Box files appear in sorted order regardless of creation order.
        let boxes: Vec<&String> = one.steps[0]
            .args
            .iter()
            .filter(|a| a.ends_with(".box"))
            .collect();
        assert_eq!(boxes, ["a.box", "b.box", "c.box"]);
    }

    #[test]
    fn plan_arguments_reference_only_known_files() {
        let dir = training_dir(&["x", "y"], &[]);
        let fp = font_props();
        let plan = plan_training(dir.path(), "atam", fp.path()).unwrap();
        let known: BTreeSet<String> = std::fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .chain(plan.produced_artifacts.iter().cloned())
            .chain([fp.path().display().to_string()])
            .collect();
        for step in &plan.steps {
            for arg in &step.args {
                if arg.starts_with('-') || arg == "atam." {
                    continue;
                }
                assert!(known.contains(arg), "argument {arg:?} references an unknown file");
            }
        }
    }

    #[test]
    fn plan_rejects_empty_and_unpaired_directories() {
        let empty = tempfile::tempdir().unwrap();
        let fp = font_props();
        assert!(matches!(
            plan_training(empty.path(), "atam", fp.path()),
            Err(PlanError::EmptyDirectory(_))
        ));

        let dir = training_dir(&["ok"], &[]);
        std::fs::write(dir.path().join("orphan.box"), "க 1 2 3 4 0\n").unwrap();
        match plan_training(dir.path(), "atam", fp.path()) {
            Err(PlanError::Unpaired { missing_image, .. }) => {
                assert_eq!(missing_image, ["orphan"]);
            }
            other => panic!("expected Unpaired, got {other:?}"),
        }

        assert!(matches!(
            plan_training(dir.path(), "", fp.path()),
            Err(PlanError::EmptyLang)
        ));
        assert!(matches!(
            plan_training(dir.path(), "atam", Path::new("/no/such/file")),
            Err(PlanError::MissingFontProps(_))
        ));
    }

    #[test]
    fn execute_runs_steps_and_stops_on_failure() {
        let dir = tempfile::tempdir().unwrap();
        let ok = TrainingPlan {
            steps: vec![
                PlanStep { program: "true".into(), args: vec![] },
                PlanStep { program: "true".into(), args: vec![] },
            ],
            produced_artifacts: vec![],
        };
        assert!(execute_plan(&ok, dir.path()).is_ok());

        let failing = TrainingPlan {
            steps: vec![PlanStep { program: "false".into(), args: vec![] }],
            produced_artifacts: vec![],
        };
        assert!(matches!(
            execute_plan(&failing, dir.path()),
            Err(PlanError::StepFailed { status: 1, .. })
        ));
    }
}
