//! Slice-stack manifests: a plain text file listing one slice path per line,
//! with an optional tab-separated ground-truth mask path, plus optional
//! `@stack_id` and `@pixel_spacing` directives. Paths are resolved relative
//! to the manifest file.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::pgm::{read_mask_pgm, read_pgm};
use crate::pipeline::SliceStack;

#[derive(Debug, Clone)]
pub struct Manifest {
    pub stack_id: String,
    pub pixel_spacing: Option<(f64, f64)>,
    pub slices: Vec<PathBuf>,
    pub truths: Vec<Option<PathBuf>>,
}

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.display().to_string(),
        message: message.into(),
    }
}

pub fn parse_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut manifest = Manifest {
        stack_id: path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "stack".into()),
        pixel_spacing: None,
        slices: Vec::new(),
        truths: Vec::new(),
    };
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('@') {
            let mut parts = rest.split_whitespace();
            match parts.next() {
                Some("stack_id") => {
                    manifest.stack_id = parts.collect::<Vec<_>>().join(" ");
                }
                Some("pixel_spacing") => {
                    let mut read = || -> Option<f64> { parts.next()?.parse().ok() };
                    let x = read();
                    let y = read();
                    match (x, y) {
                        (Some(x), Some(y)) => manifest.pixel_spacing = Some((x, y)),
                        _ => {
                            return Err(format_err(
                                path,
                                format!("line {}: bad @pixel_spacing", lineno + 1),
                            ))
                        }
                    }
                }
                other => {
                    return Err(format_err(
                        path,
                        format!("line {}: unknown directive {:?}", lineno + 1, other),
                    ))
                }
            }
            continue;
        }
        let mut fields = line.split('\t');
        let slice = fields.next().unwrap();
        manifest.slices.push(base.join(slice));
        manifest.truths.push(fields.next().map(|t| base.join(t)));
    }
    if manifest.slices.is_empty() {
        return Err(format_err(path, "manifest lists no slices"));
    }
    Ok(manifest)
}

/// Parses the manifest and loads every referenced file, checking that all
/// slices share one shape. Truth masks must be given for every slice or for
/// none.
pub fn load_stack(path: &Path) -> Result<SliceStack> {
    let manifest = parse_manifest(path)?;
    let mut slices = Vec::with_capacity(manifest.slices.len());
    for slice_path in &manifest.slices {
        slices.push(read_pgm(slice_path)?);
    }
    let (w, h) = (slices[0].width(), slices[0].height());
    for s in &slices {
        if s.width() != w || s.height() != h {
            return Err(Error::ShapeMismatch(w, h, s.width(), s.height()));
        }
    }
    let truth_count = manifest.truths.iter().filter(|t| t.is_some()).count();
    let truth_lesion = if truth_count == 0 {
        None
    } else if truth_count == manifest.truths.len() {
        let mut masks = Vec::with_capacity(truth_count);
        for t in manifest.truths.iter().flatten() {
            let mask = read_mask_pgm(t)?;
            if mask.width() != w || mask.height() != h {
                return Err(Error::ShapeMismatch(w, h, mask.width(), mask.height()));
            }
            masks.push(mask);
        }
        Some(masks)
    } else {
        return Err(format_err(
            path,
            "truth masks must be listed for every slice or for none",
        ));
    };
    Ok(SliceStack {
        stack_id: manifest.stack_id,
        slices,
        truth_lesion,
        truth_brain: None,
        pixel_spacing: manifest.pixel_spacing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::GrayImage;
    use crate::pgm::write_pgm;

    fn tmp_dir(name: &str) -> PathBuf {
        let dir = std::env::temp_dir().join("wmi_manifest_test").join(name);
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn parses_directives_and_relative_paths() {
        let dir = tmp_dir("parse");
        let img = GrayImage::filled(8, 8, 50).unwrap();
        write_pgm(&dir.join("s0.pgm"), &img).unwrap();
        write_pgm(&dir.join("s1.pgm"), &img).unwrap();
        let manifest_path = dir.join("stack.txt");
        std::fs::write(
            &manifest_path,
            "# demo\n@stack_id demo-1\n@pixel_spacing 1.0 1.5\ns0.pgm\ns1.pgm\n",
        )
        .unwrap();
        let stack = load_stack(&manifest_path).unwrap();
        assert_eq!(stack.stack_id, "demo-1");
        assert_eq!(stack.pixel_spacing, Some((1.0, 1.5)));
        assert_eq!(stack.slices.len(), 2);
        assert!(stack.truth_lesion.is_none());
    }

    #[test]
    fn rejects_empty_and_mixed_truth() {
        let dir = tmp_dir("bad");
        let manifest_path = dir.join("empty.txt");
        std::fs::write(&manifest_path, "# nothing\n").unwrap();
        assert!(load_stack(&manifest_path).is_err());

        let img = GrayImage::filled(8, 8, 50).unwrap();
        write_pgm(&dir.join("s0.pgm"), &img).unwrap();
        write_pgm(&dir.join("s1.pgm"), &img).unwrap();
        write_pgm(&dir.join("t0.pgm"), &img).unwrap();
        let mixed = dir.join("mixed.txt");
        std::fs::write(&mixed, "s0.pgm\tt0.pgm\ns1.pgm\n").unwrap();
        assert!(load_stack(&mixed).is_err());
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let dir = tmp_dir("dims");
        write_pgm(&dir.join("a.pgm"), &GrayImage::filled(8, 8, 1).unwrap()).unwrap();
        write_pgm(&dir.join("b.pgm"), &GrayImage::filled(9, 8, 1).unwrap()).unwrap();
        let manifest_path = dir.join("stack.txt");
        std::fs::write(&manifest_path, "a.pgm\nb.pgm\n").unwrap();
        assert!(matches!(
            load_stack(&manifest_path),
            Err(Error::ShapeMismatch(..))
        ));
    }

    #[test]
    fn missing_slice_file_is_io_error() {
        let dir = tmp_dir("missing");
        let manifest_path = dir.join("stack.txt");
        std::fs::write(&manifest_path, "nope.pgm\n").unwrap();
        assert!(matches!(load_stack(&manifest_path), Err(Error::Io(_))));
    }
}
