//! Segment and layer metadata plus the server availability map.
//!
//! Quality scores are supplied by the manifest per (segment, layer count);
//! nothing here looks at pixels.

use std::collections::BTreeMap;
use std::path::Path;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rate::{self, Rational};

/// One layer of one segment.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerSpec {
    /// 1-based.
    pub segment: usize,
    /// 1-based, 1 is the base layer.
    pub layer: usize,
    /// Kilobits.
    pub size: Rational,
    pub cumulative_kbps: Rational,
    /// Quality when layers `1..=layer` are received.
    pub quality: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Video {
    pub id: String,
    pub segment_duration: Rational,
    /// `layers[segment - 1][layer - 1]`.
    layers: Vec<Vec<LayerSpec>>,
    /// server name -> highest layer held, per segment (0 = none).
    availability: BTreeMap<String, Vec<usize>>,
}

impl Video {
    pub fn segments(&self) -> usize {
        self.layers.len()
    }

    /// Number of layers of a segment.
    pub fn layer_count(&self, segment: usize) -> Result<usize> {
        Ok(self.segment(segment)?.len())
    }

    /// Smallest layer count across segments.
    pub fn max_layers(&self) -> usize {
        self.layers.iter().map(Vec::len).min().unwrap_or(0)
    }

    fn segment(&self, segment: usize) -> Result<&[LayerSpec]> {
        if segment == 0 || segment > self.layers.len() {
            return Err(Error::UnknownSegment { video: self.id.clone(), segment });
        }
        Ok(&self.layers[segment - 1])
    }

    pub fn layer(&self, segment: usize, layer: usize) -> Result<&LayerSpec> {
        let seg = self.segment(segment)?;
        if layer == 0 || layer > seg.len() {
            return Err(Error::NotFound(format!(
                "layer {layer} of segment {segment} in video `{}`",
                self.id
            )));
        }
        Ok(&seg[layer - 1])
    }

    /// δ for one layer, kilobits.
    pub fn layer_size(&self, segment: usize, layer: usize) -> Result<Rational> {
        Ok(self.layer(segment, layer)?.size)
    }

    /// Mean size of layers `1..=m`.
    pub fn avg_layer_size(&self, segment: usize, m: usize) -> Result<Rational> {
        if m == 0 {
            return Err(Error::NotFound(format!("layer 0 of segment {segment}")));
        }
        let mut total = Rational::zero();
        for l in 1..=m {
            total += self.layer_size(segment, l)?;
        }
        Ok(total / rate::int(m as i128))
    }

    /// Total kilobits of layers `1..=x`.
    pub fn prefix_size(&self, segment: usize, x: usize) -> Result<Rational> {
        let mut total = Rational::zero();
        for l in 1..=x {
            total += self.layer_size(segment, l)?;
        }
        Ok(total)
    }

    /// Quality for `layer_count` received layers; 0 layers scores 0.
    /// Counts beyond the table saturate at the top entry.
    pub fn quality_of(&self, segment: usize, layer_count: usize) -> f64 {
        match self.segment(segment) {
            Ok(seg) if layer_count > 0 && !seg.is_empty() => seg[layer_count.min(seg.len()) - 1].quality,
            _ => 0.0,
        }
    }

    /// Smallest and largest non-zero-layer quality values in the table.
    pub fn quality_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for l in self.layers.iter().flatten() {
            lo = lo.min(l.quality);
            hi = hi.max(l.quality);
        }
        (lo, hi)
    }

    pub fn is_available(&self, server: &str, segment: usize, layer: usize) -> bool {
        self.max_available(server, segment) >= layer && layer >= 1
    }

    /// Highest layer of `segment` held by `server`.
    pub fn max_available(&self, server: &str, segment: usize) -> usize {
        self.availability
            .get(server)
            .and_then(|v| v.get(segment.wrapping_sub(1)))
            .copied()
            .unwrap_or(0)
    }

    pub fn servers(&self) -> impl Iterator<Item = &str> {
        self.availability.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Catalog {
    videos: BTreeMap<String, Video>,
}

impl Catalog {
    pub fn video(&self, id: &str) -> Result<&Video> {
        self.videos
            .get(id)
            .ok_or_else(|| Error::NotFound(format!("video `{id}`")))
    }

    pub fn videos(&self) -> impl Iterator<Item = &Video> {
        self.videos.values()
    }

    pub fn single(video: Video) -> Self {
        Catalog { videos: BTreeMap::from([(video.id.clone(), video)]) }
    }

    pub fn layer_size(&self, video: &str, segment: usize, layer: usize) -> Result<Rational> {
        self.video(video)?.layer_size(segment, layer)
    }

    pub fn avg_layer_size(&self, video: &str, segment: usize, m: usize) -> Result<Rational> {
        self.video(video)?.avg_layer_size(segment, m)
    }

    pub fn quality_of(&self, video: &str, segment: usize, layer_count: usize) -> f64 {
        self.video(video).map(|v| v.quality_of(segment, layer_count)).unwrap_or(0.0)
    }

    /// Quality extrema over every video, used as the fairness index range.
    pub fn quality_range(&self) -> (f64, f64) {
        self.videos.values().map(Video::quality_range).fold(
            (f64::INFINITY, f64::NEG_INFINITY),
            |(lo, hi), (a, b)| (lo.min(a), hi.max(b)),
        )
    }
}

// ---------------------------------------------------------------------------
// Manifest documents

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ManifestDoc {
    Many { videos: Vec<VideoDoc> },
    One(VideoDoc),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VideoDoc {
    #[serde(default = "default_video_id")]
    pub id: String,
    pub segment_duration_s: f64,
    /// Defaults to the length of the quality arrays.
    #[serde(default)]
    pub segments: Option<usize>,
    pub layers: Vec<LayerDoc>,
    pub availability: BTreeMap<String, AvailabilityDoc>,
}

fn default_video_id() -> String {
    "video".to_string()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerDoc {
    pub cumulative_kbps: f64,
    /// One score per segment, or a single score for all segments.
    pub quality: Vec<f64>,
    /// Explicit per-segment sizes in kilobits (single value = all segments).
    #[serde(default)]
    pub sizes_kb: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AvailabilityDoc {
    /// Same highest layer on every segment.
    All(usize),
    PerSegment(Vec<SegmentAvailability>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SegmentAvailability {
    MaxLayer(usize),
    /// Explicit layer list; must be `1..=k`.
    Layers(Vec<usize>),
}

fn per_segment<T: Copy>(values: &[T], segments: usize, what: &str) -> Result<Vec<T>> {
    match values.len() {
        1 => Ok(vec![values[0]; segments]),
        n if n == segments => Ok(values.to_vec()),
        n => Err(Error::Validation(format!("{what}: expected {segments} entries, found {n}"))),
    }
}

impl VideoDoc {
    pub fn into_video(self) -> Result<Video> {
        let id = self.id;
        if !(self.segment_duration_s.is_finite() && self.segment_duration_s > 0.0) {
            return Err(Error::Validation(format!("video `{id}`: segment duration must be positive")));
        }
        if self.layers.is_empty() {
            return Err(Error::Validation(format!("video `{id}` has no layers")));
        }
        let duration = rate::from_config_f64(self.segment_duration_s);
        let segments = match self.segments {
            Some(n) => n,
            None => self.layers.iter().map(|l| l.quality.len()).max().unwrap_or(0),
        };
        if segments == 0 {
            return Err(Error::Validation(format!("video `{id}` has no segments")));
        }

        let mut prev_cum = Rational::zero();
        let mut per_layer = Vec::with_capacity(self.layers.len());
        for (i, l) in self.layers.iter().enumerate() {
            let layer = i + 1;
            if !l.cumulative_kbps.is_finite() {
                return Err(Error::Validation(format!("layer {layer}: bitrate is not finite")));
            }
            let cum = rate::from_config_f64(l.cumulative_kbps);
            if cum <= prev_cum {
                return Err(Error::Validation(format!(
                    "video `{id}`: cumulative bitrate must increase strictly (layer {layer})"
                )));
            }
            let quality = per_segment(&l.quality, segments, &format!("layer {layer} quality"))?;
            let sizes = match &l.sizes_kb {
                Some(s) => Some(per_segment(s, segments, &format!("layer {layer} sizes"))?),
                None => None,
            };
            per_layer.push((cum, cum - prev_cum, quality, sizes));
            prev_cum = cum;
        }

        let mut layers = Vec::with_capacity(segments);
        for seg in 1..=segments {
            let mut row = Vec::with_capacity(per_layer.len());
            let mut prev_q = 0.0f64;
            for (i, (cum, inc, quality, sizes)) in per_layer.iter().enumerate() {
                let q = quality[seg - 1];
                if !(0.0..=1.0).contains(&q) {
                    return Err(Error::Validation(format!(
                        "quality {q} of segment {seg} layer {} is outside [0, 1]",
                        i + 1
                    )));
                }
                if q < prev_q {
                    return Err(Error::Validation(format!(
                        "quality decreases at segment {seg} layer {}",
                        i + 1
                    )));
                }
                prev_q = q;
                let size = match sizes {
                    Some(s) => {
                        let v = s[seg - 1];
                        if !(v.is_finite() && v > 0.0) {
                            return Err(Error::Validation(format!(
                                "size of segment {seg} layer {} must be positive",
                                i + 1
                            )));
                        }
                        rate::from_config_f64(v)
                    }
                    None => inc * duration,
                };
                row.push(LayerSpec { segment: seg, layer: i + 1, size, cumulative_kbps: *cum, quality: q });
            }
            layers.push(row);
        }

        let mut availability = BTreeMap::new();
        for (server, doc) in self.availability {
            let entries: Vec<SegmentAvailability> = match doc {
                AvailabilityDoc::All(k) => vec![SegmentAvailability::MaxLayer(k)],
                AvailabilityDoc::PerSegment(v) => v,
            };
            let mut maxes = Vec::with_capacity(entries.len());
            for (i, e) in entries.iter().enumerate() {
                let k = match e {
                    SegmentAvailability::MaxLayer(k) => *k,
                    SegmentAvailability::Layers(ls) => {
                        let mut ls = ls.clone();
                        ls.sort_unstable();
                        ls.dedup();
                        if ls.iter().enumerate().any(|(j, &l)| l != j + 1) {
                            return Err(Error::Validation(format!(
                                "server `{server}` holds layers {ls:?} of segment {} without the lower layers",
                                i + 1
                            )));
                        }
                        ls.len()
                    }
                };
                if k > per_layer.len() {
                    return Err(Error::Validation(format!(
                        "server `{server}` claims layer {k}, video has {}",
                        per_layer.len()
                    )));
                }
                maxes.push(k);
            }
            let maxes = per_segment(&maxes, segments, &format!("availability of `{server}`"))?;
            availability.insert(server, maxes);
        }

        Ok(Video { id, segment_duration: duration, layers, availability })
    }
}

impl ManifestDoc {
    pub fn into_catalog(self) -> Result<Catalog> {
        let docs = match self {
            ManifestDoc::Many { videos } => videos,
            ManifestDoc::One(v) => vec![v],
        };
        if docs.is_empty() {
            return Err(Error::Validation("manifest lists no videos".into()));
        }
        let mut videos = BTreeMap::new();
        for d in docs {
            let v = d.into_video()?;
            if videos.contains_key(&v.id) {
                return Err(Error::Validation(format!("duplicate video id `{}`", v.id)));
            }
            videos.insert(v.id.clone(), v);
        }
        Ok(Catalog { videos })
    }
}

/// Parses and validates a JSON manifest.
pub fn load_catalog(document: &str) -> Result<Catalog> {
    let value: serde_json::Value =
        serde_json::from_str(document).map_err(|e| Error::Parse(format!("manifest: {e}")))?;
    // Untagged enums swallow the real error, so try the shapes explicitly.
    let doc = if value.get("videos").is_some() {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Many {
            videos: Vec<VideoDoc>,
        }
        let m: Many = serde_json::from_value(value).map_err(|e| Error::Parse(format!("manifest: {e}")))?;
        ManifestDoc::Many { videos: m.videos }
    } else {
        ManifestDoc::One(serde_json::from_value(value).map_err(|e| Error::Parse(format!("manifest: {e}")))?)
    };
    doc.into_catalog()
}

pub fn load_catalog_file(path: impl AsRef<Path>) -> Result<Catalog> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
    load_catalog(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FOUR_LAYERS: &str = r#"{
        "id": "demo",
        "segment_duration_s": 5,
        "layers": [
            {"cumulative_kbps": 650,  "quality": [0.80, 0.82]},
            {"cumulative_kbps": 1100, "quality": [0.88, 0.89]},
            {"cumulative_kbps": 1650, "quality": [0.93, 0.94]},
            {"cumulative_kbps": 2300, "quality": [0.97, 0.98]}
        ],
        "availability": {"A": 4, "B": [2, 3]}
    }"#;

    #[test]
    fn sizes_follow_bitrate_increments() {
        let cat = load_catalog(FOUR_LAYERS).unwrap();
        let v = cat.video("demo").unwrap();
        let sizes: Vec<_> = (1..=4).map(|l| v.layer_size(1, l).unwrap()).collect();
        assert_eq!(sizes, [3250, 2250, 2750, 3250].map(rate::int));
        assert_eq!(v.avg_layer_size(1, 4).unwrap(), rate::int(2875));
        assert_eq!(v.avg_layer_size(2, 1).unwrap(), rate::int(3250));
        assert!(matches!(v.layer_size(1, 5), Err(Error::NotFound(_))));
        assert!(matches!(v.layer_size(3, 1), Err(Error::UnknownSegment { .. })));
    }

    #[test]
    fn quality_lookup() {
        let v = load_catalog(FOUR_LAYERS).unwrap().video("demo").unwrap().clone();
        assert_eq!(v.quality_of(1, 0), 0.0);
        assert_eq!(v.quality_of(2, 4), 0.98);
        assert_eq!(v.quality_of(1, 2), 0.88);
        assert_eq!(v.quality_range(), (0.80, 0.98));
    }

    #[test]
    fn availability_per_segment() {
        let v = load_catalog(FOUR_LAYERS).unwrap().video("demo").unwrap().clone();
        assert!(v.is_available("A", 2, 4));
        assert!(v.is_available("B", 1, 2));
        assert!(!v.is_available("B", 1, 3));
        assert!(v.is_available("B", 2, 3));
        assert!(!v.is_available("C", 1, 1));
    }

    #[test]
    fn explicit_size_is_echoed() {
        let cat = load_catalog(
            r#"{"segment_duration_s": 2, "layers": [{"cumulative_kbps": 100, "quality": [0.5], "sizes_kb": [123.5]}],
                "availability": {"S": 1}}"#,
        )
        .unwrap();
        assert_eq!(cat.layer_size("video", 1, 1).unwrap(), Rational::new(247, 2));
    }

    #[test]
    fn rejects_non_prefix_availability() {
        let doc = r#"{"segment_duration_s": 5,
            "layers": [{"cumulative_kbps": 650, "quality": [0.8]}, {"cumulative_kbps": 1100, "quality": [0.9]}],
            "availability": {"S": [[2]]}}"#;
        assert!(matches!(load_catalog(doc), Err(Error::Validation(_))));
    }

    #[test]
    fn rejects_bad_tables() {
        let non_monotone = r#"{"segment_duration_s": 5,
            "layers": [{"cumulative_kbps": 650, "quality": [0.8]}, {"cumulative_kbps": 600, "quality": [0.9]}],
            "availability": {}}"#;
        assert!(matches!(load_catalog(non_monotone), Err(Error::Validation(_))));
        let quality_drop = r#"{"segment_duration_s": 5,
            "layers": [{"cumulative_kbps": 650, "quality": [0.8]}, {"cumulative_kbps": 700, "quality": [0.7]}],
            "availability": {}}"#;
        assert!(matches!(load_catalog(quality_drop), Err(Error::Validation(_))));
        assert!(matches!(load_catalog("[1,"), Err(Error::Parse(_))));
        assert!(matches!(
            load_catalog(r#"{"segment_duration_s": 5, "layers": [], "availability": {}, "extra": 1}"#),
            Err(Error::Parse(_))
        ));
    }
}
