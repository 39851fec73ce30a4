//! Score-stack and gradient-stack files: tensors plus a sidecar text manifest.
//!
//! Score manifest (`#` starts a comment):
//!
//! ```text
//! tensor scores.smt
//! class 0 aeroplane
//! class 1 bicycle
//! background 2
//! original_extent 500 375
//! ```
//!
//! The tensor has dims `[slices, H, W]`; every slice is either a named class
//! or the background.
//!
//! Gradient manifest:
//!
//! ```text
//! layers 3 4 5
//! class 0 tabby
//! class 1 tiger_cat
//! tensor 3 0 l3_c0.smt
//! ```
//!
//! `class <rank> <label>` lists the top-ranked classes in descending score
//! order; `tensor <layer> <rank> <file>` names one `[K, H, W]` tensor.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::map::Grid;
use crate::pooling::{ChannelTensor, GradientLayer, GradientStack, ScoreMapStack};
use crate::tensor::{read_tensor, write_tensor, TensorFile};

pub const SCORE_MANIFEST: &str = "manifest.txt";
pub const GRADIENT_MANIFEST: &str = "manifest.txt";

fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then(|| (i + 1, l.split_whitespace().collect()))
    })
}

fn parse_num<T: std::str::FromStr>(tok: &str, path: &Path, kind: &'static str, line: usize) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::malformed(kind, path, format!("line {line}: bad number {tok:?}")))
}

/// Loads a score stack from its manifest.
pub fn read_score_stack(manifest: impl AsRef<Path>) -> Result<(ScoreMapStack, Vec<String>)> {
    const KIND: &str = "score manifest";
    let manifest = manifest.as_ref();
    let text = fs::read_to_string(manifest).map_err(|e| Error::io(manifest, e))?;
    let mut tensor_name = None;
    let mut classes = BTreeMap::new();
    let mut background = None;
    for (ln, toks) in lines(&text) {
        match toks.as_slice() {
            ["tensor", name] => tensor_name = Some(name.to_string()),
            ["class", idx, name @ ..] if !name.is_empty() => {
                let idx: usize = parse_num(idx, manifest, KIND, ln)?;
                if classes.insert(idx, name.join(" ")).is_some() {
                    return Err(Error::malformed(KIND, manifest, format!("line {ln}: duplicate slice {idx}")));
                }
            }
            ["background", idx] => background = Some(parse_num::<usize>(idx, manifest, KIND, ln)?),
            ["original_extent", _, _] => {}
            _ => return Err(Error::malformed(KIND, manifest, format!("line {ln}: unrecognized entry"))),
        }
    }
    let tensor_name = tensor_name.ok_or_else(|| Error::malformed(KIND, manifest, "no tensor entry"))?;
    let dir = manifest.parent().unwrap_or(Path::new("."));
    let t = read_tensor(dir.join(&tensor_name))?;
    let [slices, h, w] = *t.dims() else {
        return Err(Error::malformed(KIND, manifest, format!("tensor dims {:?} are not [slices, H, W]", t.dims())));
    };
    let slice_of = |i: usize| -> Grid {
        let n = h * w;
        Grid::new(w, h, t.data()[i * n..(i + 1) * n].iter().map(|&v| v as f64).collect()).expect("slice extent")
    };
    let mut class_maps = Vec::new();
    let mut names = Vec::new();
    for i in 0..slices {
        if Some(i) == background {
            continue;
        }
        let name = classes
            .remove(&i)
            .ok_or_else(|| Error::malformed(KIND, manifest, format!("slice {i} is neither a class nor background")))?;
        class_maps.push(slice_of(i));
        names.push(name);
    }
    if let Some((idx, _)) = classes.into_iter().next() {
        return Err(Error::malformed(KIND, manifest, format!("class slice {idx} beyond tensor extent {slices}")));
    }
    let bg = match background {
        Some(b) if b >= slices => {
            return Err(Error::malformed(KIND, manifest, format!("background slice {b} beyond tensor extent")))
        }
        Some(b) => Some(slice_of(b)),
        None => None,
    };
    Ok((ScoreMapStack::new(class_maps, bg)?, names))
}

/// Writes a score stack (background last) and its manifest into `dir`.
pub fn write_score_stack(dir: impl AsRef<Path>, stack: &ScoreMapStack, names: &[String]) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (w, h) = (stack.width(), stack.height());
    let mut data = Vec::new();
    for c in 0..stack.class_count() {
        data.extend(stack.class_map(c).as_slice().iter().map(|&v| v as f32));
    }
    let mut slices = stack.class_count();
    if let Some(bg) = stack.background() {
        data.extend(bg.as_slice().iter().map(|&v| v as f32));
        slices += 1;
    }
    write_tensor(&TensorFile::new(vec![slices, h, w], data)?, dir.join("scores.smt"))?;
    let mut m = String::from("tensor scores.smt\n");
    for c in 0..stack.class_count() {
        let name = names.get(c).map(String::as_str).unwrap_or("class");
        writeln!(m, "class {c} {name}").unwrap();
    }
    if stack.background().is_some() {
        writeln!(m, "background {}", stack.class_count()).unwrap();
    }
    let path = dir.join(SCORE_MANIFEST);
    fs::write(&path, m).map_err(|e| Error::io(&path, e))
}

/// Loads a gradient stack from its manifest.
pub fn read_gradient_stack(manifest: impl AsRef<Path>) -> Result<GradientStack> {
    const KIND: &str = "gradient manifest";
    let manifest = manifest.as_ref();
    let text = fs::read_to_string(manifest).map_err(|e| Error::io(manifest, e))?;
    let mut layer_ids: Vec<u32> = Vec::new();
    let mut labels = BTreeMap::new();
    let mut files: BTreeMap<(u32, usize), String> = BTreeMap::new();
    for (ln, toks) in lines(&text) {
        match toks.as_slice() {
            ["layers", ids @ ..] if !ids.is_empty() => {
                layer_ids = ids
                    .iter()
                    .map(|t| parse_num(t, manifest, KIND, ln))
                    .collect::<Result<_>>()?;
            }
            ["class", rank, label @ ..] if !label.is_empty() => {
                labels.insert(parse_num::<usize>(rank, manifest, KIND, ln)?, label.join(" "));
            }
            ["tensor", layer, rank, file] => {
                let key = (parse_num(layer, manifest, KIND, ln)?, parse_num(rank, manifest, KIND, ln)?);
                files.insert(key, file.to_string());
            }
            ["original_extent", _, _] => {}
            _ => return Err(Error::malformed(KIND, manifest, format!("line {ln}: unrecognized entry"))),
        }
    }
    if layer_ids.is_empty() {
        return Err(Error::malformed(KIND, manifest, "no layers entry"));
    }
    let class_count = labels.len();
    if labels.keys().copied().ne(0..class_count) {
        return Err(Error::malformed(KIND, manifest, "class ranks must be 0..K without gaps"));
    }
    let dir = manifest.parent().unwrap_or(Path::new("."));
    let mut layers = Vec::new();
    for &id in &layer_ids {
        let mut per_class = Vec::new();
        for rank in 0..class_count {
            let file = files
                .get(&(id, rank))
                .ok_or_else(|| Error::malformed(KIND, manifest, format!("no tensor for layer {id}, class rank {rank}")))?;
            let t = read_tensor(dir.join(file))?;
            let [k, h, w] = *t.dims() else {
                return Err(Error::malformed(KIND, manifest, format!("tensor {file} dims {:?} are not [K, H, W]", t.dims())));
            };
            per_class.push(ChannelTensor::new(k, h, w, t.data().iter().map(|&v| v as f64).collect())?);
        }
        layers.push(GradientLayer { id, per_class });
    }
    GradientStack::new(labels.into_values().collect(), layers)
}

/// Writes a gradient stack: one tensor per (layer, class) plus the manifest.
pub fn write_gradient_stack(dir: impl AsRef<Path>, stack: &GradientStack, tensors: &[(u32, usize, Vec<f32>, [usize; 3])]) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut m = String::from("layers");
    for l in stack.layers() {
        write!(m, " {}", l.id).unwrap();
    }
    m.push('\n');
    for (rank, label) in stack.class_labels().iter().enumerate() {
        writeln!(m, "class {rank} {label}").unwrap();
    }
    for (layer, rank, data, dims) in tensors {
        let name = format!("l{layer}_c{rank}.smt");
        write_tensor(&TensorFile::new(dims.to_vec(), data.clone())?, dir.join(&name))?;
        writeln!(m, "tensor {layer} {rank} {name}").unwrap();
    }
    let path = dir.join(GRADIENT_MANIFEST);
    fs::write(&path, m).map_err(|e| Error::io(&path, e))
}
