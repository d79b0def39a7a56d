//! The information disclosure policy: a total map from world labels onto an
//! image space, and its lifting of observer filters back onto world labels.
//!
//! Image symbols inherit the kind of the labels they conflate, so an image
//! of an action is an action-kind label of the filter. By default an image
//! name may not be shared between an action and an observation.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::graph::{Execution, Kind, Label, PGraph};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LabelMapError {
    #[error("label `{0}` is not in the domain of the label map")]
    UnmappedLabel(Label),
    #[error("filter label `{0}` has no preimage under the label map")]
    UnmappedImage(Label),
    #[error("image `{0}` is shared by an action and an observation")]
    SharedImage(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    map: BTreeMap<Label, String>,
    allow_shared_images: bool,
}

impl LabelMap {
    pub fn new(
        entries: impl IntoIterator<Item = (Label, String)>,
        allow_shared_images: bool,
    ) -> Result<Self, LabelMapError> {
        let map: BTreeMap<Label, String> = entries.into_iter().collect();
        if !allow_shared_images {
            let mut kinds: BTreeMap<&str, Kind> = BTreeMap::new();
            for (label, image) in &map {
                if let Some(prev) = kinds.insert(image, label.kind()) {
                    if prev != label.kind() {
                        return Err(LabelMapError::SharedImage(image.clone()));
                    }
                }
            }
        }
        Ok(Self {
            map,
            allow_shared_images,
        })
    }

    /// Every label maps to an image with its own name.
    pub fn identity<'a>(labels: impl IntoIterator<Item = &'a Label>) -> Self {
        Self {
            map: labels
                .into_iter()
                .map(|l| (l.clone(), l.name().to_owned()))
                .collect(),
            allow_shared_images: false,
        }
    }

    pub fn allows_shared_images(&self) -> bool {
        self.allow_shared_images
    }

    pub fn entries(&self) -> impl Iterator<Item = (&Label, &str)> + '_ {
        self.map.iter().map(|(l, x)| (l, x.as_str()))
    }

    pub fn domain(&self) -> impl Iterator<Item = &Label> + '_ {
        self.map.keys()
    }

    pub fn image_space(&self) -> BTreeSet<Label> {
        self.map
            .iter()
            .map(|(l, x)| Label::new(l.kind(), x.clone()))
            .collect()
    }

    pub fn image(&self, label: &Label) -> Result<Label, LabelMapError> {
        self.map
            .get(label)
            .map(|x| Label::new(label.kind(), x.clone()))
            .ok_or_else(|| LabelMapError::UnmappedLabel(label.clone()))
    }

    pub fn image_of_execution(&self, s: &[Label]) -> Result<Execution, LabelMapError> {
        s.iter().map(|l| self.image(l)).collect()
    }

    pub fn preimage(&self, image: &Label) -> BTreeSet<Label> {
        self.map
            .iter()
            .filter(|(l, x)| l.kind() == image.kind() && x.as_str() == image.name())
            .map(|(l, _)| l.clone())
            .collect()
    }

    /// Fails on the first label of `g` outside the domain.
    pub fn ensure_total_on(&self, g: &PGraph) -> Result<(), LabelMapError> {
        match g.labels().into_iter().find(|l| !self.map.contains_key(*l)) {
            Some(l) => Err(LabelMapError::UnmappedLabel(l.clone())),
            None => Ok(()),
        }
    }

    /// Replaces every filter label by its preimage. Edges whose preimage is
    /// empty are dropped, or rejected when `strict`.
    pub fn preimage_graph(&self, filter: &PGraph, strict: bool) -> Result<PGraph, LabelMapError> {
        let mut out = PGraph::new();
        for (v, kind) in filter.vertices() {
            out.add_vertex(v.clone(), kind);
        }
        for v in filter.initial() {
            out.mark_initial(v.clone());
        }
        for (src, dst, images) in filter.edges() {
            let mut labels = BTreeSet::new();
            for image in images {
                let pre = self.preimage(image);
                if pre.is_empty() && strict {
                    return Err(LabelMapError::UnmappedImage(image.clone()));
                }
                labels.extend(pre);
            }
            if !labels.is_empty() {
                out.add_edge(src.clone(), dst.clone(), labels);
            }
        }
        Ok(out)
    }
}
