use std::collections::BTreeMap;

use super::image::{dilate_image, rotate_image, square_side, Image};
use crate::error::{Error, Result};
use crate::math::{Matrix, RandomSource};

/// Samples of one domain: an `n × d_x` matrix and one class id per row.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainView {
    pub name: String,
    pub x: Matrix,
    pub labels: Vec<usize>,
}

impl DomainView {
    pub fn new(name: impl Into<String>, x: Matrix, labels: Vec<usize>) -> Result<Self> {
        if x.rows() != labels.len() {
            return Err(Error::DimensionMismatch {
                context: "domain view labels",
                expected: x.rows(),
                actual: labels.len(),
            });
        }
        Ok(Self {
            name: name.into(),
            x,
            labels,
        })
    }

    pub fn from_images(name: impl Into<String>, images: &[Image], labels: Vec<usize>) -> Result<Self> {
        let rows: Vec<&[f64]> = images.iter().map(Image::pixels).collect();
        if let Some(first) = images.first() {
            if images
                .iter()
                .any(|i| (i.width(), i.height()) != (first.width(), first.height()))
            {
                return Err(Error::InvalidArgument(
                    "images in a view must share dimensions".into(),
                ));
            }
        }
        Self::new(name, Matrix::from_rows(&rows), labels)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    /// One past the largest class id.
    pub fn num_classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |&c| c + 1)
    }

    /// Row indices grouped by class id.
    pub fn class_indices(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &c) in self.labels.iter().enumerate() {
            by_class.entry(c).or_default().push(i);
        }
        by_class
    }

    pub fn class_counts(&self) -> BTreeMap<usize, usize> {
        self.class_indices()
            .into_iter()
            .map(|(c, v)| (c, v.len()))
            .collect()
    }

    pub fn select(&self, indices: &[usize]) -> DomainView {
        DomainView {
            name: self.name.clone(),
            x: self.x.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn image(&self, row: usize) -> Result<Image> {
        Image::from_square_row(self.x.row(row))
    }
}

/// `M` domain views over a shared input space.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiDomainCorpus {
    pub views: Vec<DomainView>,
    /// All views have the same row count and row `i` carries the same label
    /// in every view.
    pub aligned: bool,
}

impl MultiDomainCorpus {
    pub fn new(views: Vec<DomainView>) -> Result<Self> {
        let Some(first) = views.first() else {
            return Err(Error::Empty("corpus views"));
        };
        let dim = first.dim();
        if let Some(v) = views.iter().find(|v| v.dim() != dim) {
            return Err(Error::DimensionMismatch {
                context: "corpus view dimension",
                expected: dim,
                actual: v.dim(),
            });
        }
        let aligned = views
            .iter()
            .all(|v| v.len() == first.len() && v.labels == first.labels);
        Ok(Self { views, aligned })
    }

    #[inline]
    pub fn domains(&self) -> usize {
        self.views.len()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.views[0].dim()
    }

    pub fn num_classes(&self) -> usize {
        self.views.iter().map(DomainView::num_classes).max().unwrap_or(0)
    }

    /// Corpus without view `held_out`.
    pub fn without(&self, held_out: usize) -> Result<MultiDomainCorpus> {
        let views: Vec<DomainView> = self
            .views
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != held_out)
            .map(|(_, v)| v.clone())
            .collect();
        MultiDomainCorpus::new(views)
    }

    /// All views stacked into one sample matrix with labels, in view order.
    pub fn concatenated(&self) -> Result<(Matrix, Vec<usize>)> {
        let blocks: Vec<&Matrix> = self.views.iter().map(|v| &v.x).collect();
        let x = Matrix::vstack(&blocks)?;
        let labels = self.views.iter().flat_map(|v| v.labels.iter().copied()).collect();
        Ok((x, labels))
    }
}

/// Per-image transformation producing one synthetic view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransformKind {
    Identity,
    /// Counterclockwise rotation in degrees.
    Rotate(f64),
    /// Shrink factor in `(0, 1]`.
    Dilate(f64),
}

impl TransformKind {
    pub fn apply(&self, img: &Image) -> Result<Image> {
        match *self {
            TransformKind::Identity => Ok(img.clone()),
            TransformKind::Rotate(deg) => rotate_image(img, deg),
            TransformKind::Dilate(f) => dilate_image(img, f),
        }
    }

    /// Stable textual form used in cache manifests.
    pub fn describe(&self) -> String {
        match self {
            TransformKind::Identity => "identity".into(),
            TransformKind::Rotate(d) => format!("rotate:{d}"),
            TransformKind::Dilate(f) => format!("dilate:{f}"),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown transform `{s}`"));
        match s.split_once(':') {
            None if s == "identity" => Ok(TransformKind::Identity),
            Some(("rotate", v)) => v.parse().map(TransformKind::Rotate).map_err(|_| bad()),
            Some(("dilate", v)) => v.parse().map(TransformKind::Dilate).map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewTransform {
    pub name: String,
    pub kind: TransformKind,
}

impl ViewTransform {
    pub fn new(name: impl Into<String>, kind: TransformKind) -> Self {
        Self {
            name: name.into(),
            kind,
        }
    }
}

/// The six roll-rotation views: 0°, 15°, …, 75°.
pub fn mnist_r_transforms() -> Vec<ViewTransform> {
    (0..6)
        .map(|k| {
            let deg = 15.0 * k as f64;
            let kind = if k == 0 {
                TransformKind::Identity
            } else {
                TransformKind::Rotate(deg)
            };
            ViewTransform::new(format!("M{}", if k == 0 { String::new() } else { format!("{}", 15 * k) }), kind)
        })
        .collect()
}

/// The five dilation views: ×1.0, ×0.9, …, ×0.6.
pub fn mnist_s_transforms() -> Vec<ViewTransform> {
    [1.0, 0.9, 0.8, 0.7, 0.6]
        .into_iter()
        .map(|f| {
            if f == 1.0 {
                ViewTransform::new("M", TransformKind::Identity)
            } else {
                ViewTransform::new(format!("M*{f}"), TransformKind::Dilate(f))
            }
        })
        .collect()
}

/// Applies every transform to every base image, keeping row order and labels,
/// so row `i` is the same instance in every view.
pub fn build_view_corpus(base: &DomainView, transforms: &[ViewTransform]) -> Result<MultiDomainCorpus> {
    if transforms.is_empty() {
        return Err(Error::Empty("transform list"));
    }
    if base.is_empty() {
        return Err(Error::Empty("base view"));
    }
    let side = square_side(base.dim())?;
    let images: Vec<Image> = (0..base.len())
        .map(|i| Image::new(side, side, base.x.row(i).to_vec()))
        .collect::<Result<_>>()?;
    let views = transforms
        .iter()
        .map(|t| {
            let rows: Vec<Vec<f64>> = crate::par::map_indexed(images.len(), |i| {
                t.kind.apply(&images[i]).map(Image::into_pixels)
            })
            .into_iter()
            .collect::<Result<_>>()?;
            DomainView::new(t.name.clone(), Matrix::from_rows(&rows), base.labels.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    MultiDomainCorpus::new(views)
}

/// Draws `per_class` images of every class uniformly without replacement and
/// resizes them to `side × side`. Rows are ordered by class, then draw order.
pub fn select_base_subset(
    images: &[Image],
    labels: &[u8],
    per_class: usize,
    side: usize,
    rng: &mut RandomSource,
) -> Result<DomainView> {
    if images.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            context: "idx images vs labels",
            expected: images.len(),
            actual: labels.len(),
        });
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &c) in labels.iter().enumerate() {
        by_class.entry(c as usize).or_default().push(i);
    }
    let mut rows = Vec::new();
    let mut out_labels = Vec::new();
    for (&class, idx) in &by_class {
        if idx.len() < per_class {
            return Err(Error::InvalidArgument(format!(
                "class {class} has {} images, {per_class} requested",
                idx.len()
            )));
        }
        let mut idx = idx.clone();
        rng.shuffle(&mut idx);
        for &i in &idx[..per_class] {
            rows.push(super::image::resize_bilinear(&images[i], side, side)?.into_pixels());
            out_labels.push(class);
        }
    }
    DomainView::new("M", Matrix::from_rows(&rows), out_labels)
}

/// Balances per-class counts across domains while keeping category-level
/// correspondence.
///
/// For each class `c`, `m_c = min_l n_lc`, and every view keeps `m_c` of its
/// class-`c` rows chosen uniformly without replacement. Output rows are grouped
/// class by class, so row `i` has the same class in every view. An aligned
/// input is already balanced with instance-level correspondence; it is
/// returned unchanged so that correspondence survives.
pub fn rand_sel(corpus: &MultiDomainCorpus, rng: &mut RandomSource) -> Result<MultiDomainCorpus> {
    let per_view: Vec<BTreeMap<usize, Vec<usize>>> =
        corpus.views.iter().map(DomainView::class_indices).collect();
    let classes: std::collections::BTreeSet<usize> =
        per_view.iter().flat_map(|m| m.keys().copied()).collect();
    for &c in &classes {
        if let Some(l) = per_view.iter().position(|m| !m.contains_key(&c)) {
            return Err(Error::ClassAbsent {
                class: c,
                domain: corpus.views[l].name.clone(),
            });
        }
    }
    if corpus.aligned {
        return Ok(corpus.clone());
    }
    let mut selections: Vec<Vec<usize>> = vec![Vec::new(); corpus.domains()];
    for &c in &classes {
        let m_c = per_view.iter().map(|m| m[&c].len()).min().unwrap_or(0);
        for (sel, m) in selections.iter_mut().zip(&per_view) {
            let mut idx = m[&c].clone();
            rng.shuffle(&mut idx);
            sel.extend_from_slice(&idx[..m_c]);
        }
    }
    let views = corpus
        .views
        .iter()
        .zip(&selections)
        .map(|(v, s)| v.select(s))
        .collect();
    MultiDomainCorpus::new(views)
}

/// Stacked multi-task training data: `x_bar = [X¹; …; Xᴹ]` and
/// `targets[l] = [Xˡ; …; Xˡ]` (M copies), both `N × d_x` with `N = M·n`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingMatrices {
    pub x_bar: Matrix,
    pub targets: Vec<Matrix>,
}

pub fn assemble_training_matrices(corpus: &MultiDomainCorpus) -> Result<TrainingMatrices> {
    if !corpus.aligned {
        return Err(Error::Unaligned);
    }
    let m = corpus.domains();
    let blocks: Vec<&Matrix> = corpus.views.iter().map(|v| &v.x).collect();
    let x_bar = Matrix::vstack(&blocks)?;
    let targets = corpus
        .views
        .iter()
        .map(|v| Matrix::vstack(&vec![&v.x; m]))
        .collect::<Result<_>>()?;
    Ok(TrainingMatrices { x_bar, targets })
}
