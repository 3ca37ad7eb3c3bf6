use std::fs;
use std::path::{Path, PathBuf};

use log::warn;

use super::{decode_pgm, decode_png_gray, GrayImage};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LabeledImage {
    pub id: String,
    pub class: usize,
    pub image: GrayImage,
}

/// Images with class labels. Items are class-major, filename-sorted.
#[derive(Debug, Clone)]
pub struct LabeledImageSet {
    items: Vec<LabeledImage>,
    class_names: Vec<String>,
}

impl LabeledImageSet {
    pub fn new(items: Vec<LabeledImage>, class_names: Vec<String>) -> Result<Self> {
        if class_names.len() < 2 {
            return Err(Error::Dataset(format!(
                "need at least 2 classes, found {}",
                class_names.len()
            )));
        }
        let mut ids = std::collections::BTreeSet::new();
        for item in &items {
            if item.class >= class_names.len() {
                return Err(Error::Dataset(format!(
                    "item {} has class {} but only {} classes exist",
                    item.id,
                    item.class,
                    class_names.len()
                )));
            }
            if !ids.insert(item.id.as_str()) {
                return Err(Error::Dataset(format!("duplicate image id {}", item.id)));
            }
        }
        Ok(Self { items, class_names })
    }

    pub fn items(&self) -> &[LabeledImage] {
        &self.items
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for item in &self.items {
            counts[item.class] += 1;
        }
        counts
    }
}

/// A file that was skipped while loading.
#[derive(Debug, Clone)]
pub struct LoadWarning {
    pub path: PathBuf,
    pub reason: String,
}

/// Loads `root/<class>/<image>.{pgm,png}`; undecodable files are skipped
/// with a warning.
pub fn load_dataset(root: &Path) -> Result<(LabeledImageSet, Vec<LoadWarning>)> {
    let mut class_dirs: Vec<(String, PathBuf)> = read_dir_sorted(root)?
        .into_iter()
        .filter(|p| p.is_dir())
        .filter_map(|p| {
            let name = p.file_name()?.to_str()?.to_owned();
            Some((name, p))
        })
        .collect();
    class_dirs.sort_by(|a, b| a.0.cmp(&b.0));
    if class_dirs.len() < 2 {
        return Err(Error::Dataset(format!(
            "{} has {} class directories, need at least 2",
            root.display(),
            class_dirs.len()
        )));
    }

    let mut items = Vec::new();
    let mut warnings = Vec::new();
    for (class, (name, dir)) in class_dirs.iter().enumerate() {
        let mut usable = 0;
        for path in read_dir_sorted(dir)? {
            let Some(ext) = path.extension().and_then(|e| e.to_str()) else {
                continue;
            };
            let ext = ext.to_ascii_lowercase();
            if !path.is_file() || (ext != "pgm" && ext != "png") {
                continue;
            }
            let decoded = fs::read(&path).map_err(|e| Error::io(&path, e)).and_then(|bytes| {
                if ext == "pgm" {
                    decode_pgm(&bytes)
                } else {
                    decode_png_gray(&bytes)
                }
            });
            match decoded {
                Ok(image) => {
                    let file = path.file_name().unwrap().to_string_lossy();
                    items.push(LabeledImage {
                        id: format!("{name}/{file}"),
                        class,
                        image,
                    });
                    usable += 1;
                }
                Err(e) => {
                    warn!("skipping {}: {e}", path.display());
                    warnings.push(LoadWarning {
                        path: path.clone(),
                        reason: e.to_string(),
                    });
                }
            }
        }
        if usable < 2 {
            return Err(Error::Dataset(format!(
                "class {name} has {usable} usable images, need at least 2"
            )));
        }
    }
    let names = class_dirs.into_iter().map(|(n, _)| n).collect();
    Ok((LabeledImageSet::new(items, names)?, warnings))
}

fn read_dir_sorted(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut entries = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|entry| entry.map(|e| e.path()))
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(dir, e))?;
    entries.sort();
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::encode_pgm;

    fn write_image(path: &Path, seed: u8) {
        let img = GrayImage::from_fn(16, 16, |x, y| (x + y) as u8 ^ seed).unwrap();
        fs::write(path, encode_pgm(&img)).unwrap();
    }

    #[test]
    fn two_folders_of_three() {
        let dir = tempfile::tempdir().unwrap();
        for class in ["b", "a"] {
            fs::create_dir(dir.path().join(class)).unwrap();
            for i in 0..3 {
                write_image(&dir.path().join(class).join(format!("{i}.pgm")), i);
            }
        }
        let (set, warnings) = load_dataset(dir.path()).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(set.class_names(), ["a", "b"]);
        assert_eq!(set.items().len(), 6);
        assert_eq!(set.items()[0].id, "a/0.pgm");
        assert_eq!(set.items()[3].class, 1);
    }

    #[test]
    fn single_folder_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir(dir.path().join("only")).unwrap();
        for i in 0..3 {
            write_image(&dir.path().join("only").join(format!("{i}.pgm")), i);
        }
        assert!(matches!(load_dataset(dir.path()), Err(Error::Dataset(_))));
    }

    #[test]
    fn corrupt_file_is_skipped_with_warning() {
        let dir = tempfile::tempdir().unwrap();
        for class in ["a", "b"] {
            fs::create_dir(dir.path().join(class)).unwrap();
            write_image(&dir.path().join(class).join("1.pgm"), 1);
            write_image(&dir.path().join(class).join("2.pgm"), 2);
        }
        fs::write(dir.path().join("a").join("0.pgm"), b"P5 16 16 255\n\x01\x02").unwrap();
        fs::write(dir.path().join("a").join("notes.txt"), b"ignored").unwrap();
        let (set, warnings) = load_dataset(dir.path()).unwrap();
        assert_eq!(set.items().len(), 4);
        assert_eq!(set.class_counts(), vec![2, 2]);
        assert_eq!(warnings.len(), 1);
    }

    #[test]
    fn class_with_one_usable_image() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir(dir.path().join("a")).unwrap();
        fs::create_dir(dir.path().join("b")).unwrap();
        write_image(&dir.path().join("a").join("1.pgm"), 1);
        write_image(&dir.path().join("a").join("2.pgm"), 1);
        write_image(&dir.path().join("b").join("1.pgm"), 1);
        assert!(matches!(load_dataset(dir.path()), Err(Error::Dataset(_))));
    }
}
