//! Benchmark dataset generators and CSV load/save.
//!
//! All generators are deterministic: the spiral set is closed-form, the
//! rings use equally spaced angles by default, and the texture patches
//! draw every random quantity from the caller's [`RandomSource`]. Each
//! set carries provenance (generator name and seed) sufficient to
//! regenerate it exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numeric::RandomSource;

/// One training point: a feature vector, a binary label, and an optional
/// radius key used by curriculum ordering. The radius is derived data
/// and is not persisted by [`save_csv`].
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub features: Vec<f64>,
    pub label: u8,
    pub radius: Option<f64>,
}

/// Where a dataset came from: enough to regenerate it bit-for-bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub generator: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub samples: Vec<LabeledSample>,
    pub feature_dim: usize,
    pub provenance: Provenance,
}

impl LabeledSet {
    pub fn new(
        samples: Vec<LabeledSample>,
        feature_dim: usize,
        provenance: Provenance,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("LabeledSet"));
        }
        for (i, s) in samples.iter().enumerate() {
            if s.features.len() != feature_dim {
                return Err(Error::DimensionMismatch {
                    context: "LabeledSet sample",
                    expected: feature_dim,
                    actual: s.features.len(),
                });
            }
            if s.label > 1 {
                return Err(Error::invalid("label", format!("sample {i}: {}", s.label)));
            }
        }
        Ok(LabeledSet {
            samples,
            feature_dim,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// The two-spirals benchmark: 194 points, 97 per arm, 32 points per turn
/// plus the center endpoint. For n = 1..=97, with
/// `r = 0.4·(105−n)/104` and `α = π(n−1)/16`, the odd point is
/// `(r·sin α + 0.5, r·cos α + 0.5)` with label 1 and the even point is
/// its reflection through (0.5, 0.5) with label 0.
pub fn gen_two_spirals() -> LabeledSet {
    let mut samples = Vec::with_capacity(194);
    for n in 1..=97u32 {
        let r = 0.4 * (105.0 - n as f64) / 104.0;
        let alpha = std::f64::consts::PI * (n as f64 - 1.0) / 16.0;
        let x = r * alpha.sin() + 0.5;
        let y = r * alpha.cos() + 0.5;
        samples.push(LabeledSample {
            features: vec![x, y],
            label: 1,
            radius: Some(r),
        });
        samples.push(LabeledSample {
            features: vec![1.0 - x, 1.0 - y],
            label: 0,
            radius: Some(r),
        });
    }
    LabeledSet::new(
        samples,
        2,
        Provenance {
            generator: "spirals".into(),
            seed: 0,
        },
    )
    .expect("spiral generator produces a valid set")
}

/// Radii of the four concentric rings, innermost first.
pub const RING_RADII: [f64; 4] = [0.1, 0.2, 0.3, 0.4];

/// Points per ring.
pub const RING_POINTS: usize = 60;

/// Four concentric rings of 60 points each, centered at (0.5, 0.5),
/// alternating labels 1, 0, 1, 0 from the innermost ring outward.
/// Angles are equally spaced unless `random_angles` is set, in which
/// case they are drawn uniformly from `rng`.
pub fn gen_rings(rng: &mut RandomSource, random_angles: bool) -> LabeledSet {
    let mut samples = Vec::with_capacity(4 * RING_POINTS);
    for (i, &rho) in RING_RADII.iter().enumerate() {
        let label = if i % 2 == 0 { 1 } else { 0 };
        for j in 0..RING_POINTS {
            let theta = if random_angles {
                rng.uniform(0.0, 2.0 * std::f64::consts::PI)
            } else {
                2.0 * std::f64::consts::PI * j as f64 / RING_POINTS as f64
            };
            samples.push(LabeledSample {
                features: vec![0.5 + rho * theta.cos(), 0.5 + rho * theta.sin()],
                label,
                radius: Some(rho),
            });
        }
    }
    let generator = if random_angles { "rings-jittered" } else { "rings" };
    LabeledSet::new(
        samples,
        2,
        Provenance {
            generator: generator.into(),
            seed: rng.seed(),
        },
    )
    .expect("ring generator produces a valid set")
}

/// Synthetic two-texture patches: class 0 is a smooth sum of three
/// random-center Gaussian bumps, class 1 a random-phase oriented
/// sinusoid. Pixels are normalized to [0, 1]; classes alternate so any
/// prefix is balanced. Patches are `size × size`, single channel,
/// flattened row-major.
pub fn gen_texture_patches(
    rng: &mut RandomSource,
    count_per_class: usize,
    size: usize,
) -> Result<LabeledSet> {
    if count_per_class == 0 {
        return Err(Error::invalid("count_per_class", "must be at least 1"));
    }
    if size == 0 {
        return Err(Error::invalid("patch size", "must be at least 1"));
    }
    let mut samples = Vec::with_capacity(2 * count_per_class);
    for _ in 0..count_per_class {
        samples.push(LabeledSample {
            features: gaussian_blob_patch(rng, size),
            label: 0,
            radius: None,
        });
        samples.push(LabeledSample {
            features: stripe_patch(rng, size),
            label: 1,
            radius: None,
        });
    }
    LabeledSet::new(
        samples,
        size * size,
        Provenance {
            generator: format!("textures-s{size}-n{count_per_class}"),
            seed: rng.seed(),
        },
    )
}

fn normalize_unit(values: &mut [f64]) {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        let inv = 1.0 / (hi - lo);
        for v in values.iter_mut() {
            *v = (*v - lo) * inv;
        }
    } else {
        values.fill(0.0);
    }
}

fn gaussian_blob_patch(rng: &mut RandomSource, size: usize) -> Vec<f64> {
    let s = size as f64;
    let bumps: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| {
            let cx = rng.uniform(0.0, s);
            let cy = rng.uniform(0.0, s);
            let sigma = rng.uniform(s / 8.0, s / 4.0);
            (cx, cy, sigma)
        })
        .collect();
    let mut values = vec![0.0; size * size];
    for y in 0..size {
        for x in 0..size {
            let mut v = 0.0;
            for &(cx, cy, sigma) in &bumps {
                let dx = x as f64 - cx;
                let dy = y as f64 - cy;
                v += (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp();
            }
            values[y * size + x] = v;
        }
    }
    normalize_unit(&mut values);
    values
}

fn stripe_patch(rng: &mut RandomSource, size: usize) -> Vec<f64> {
    let freq = rng.uniform(0.15, 0.35);
    let theta = rng.uniform(0.0, std::f64::consts::PI);
    let phase = rng.uniform(0.0, 2.0 * std::f64::consts::PI);
    let (dir_x, dir_y) = (theta.cos(), theta.sin());
    let mut values = vec![0.0; size * size];
    for y in 0..size {
        for x in 0..size {
            let t = freq * (x as f64 * dir_x + y as f64 * dir_y);
            values[y * size + x] =
                (2.0 * std::f64::consts::PI * t + phase).sin();
        }
    }
    normalize_unit(&mut values);
    values
}

/// CSV header magic; the rest of the header carries dim and provenance.
const CSV_MAGIC: &str = "# quadnet-dataset v1";

/// Writes the set as CSV: a provenance header followed by one
/// `f1,...,fd,label` row per sample, values printed with 17 significant
/// digits so the round trip is bit-exact.
pub fn save_csv(set: &LabeledSet, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_csv_string(set))?;
    Ok(())
}

/// Renders the CSV text (see [`save_csv`]); exposed so callers can write
/// through their own IO.
pub fn to_csv_string(set: &LabeledSet) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{CSV_MAGIC}; dim={}; generator={}; seed={}",
        set.feature_dim, set.provenance.generator, set.provenance.seed
    );
    for s in &set.samples {
        for f in &s.features {
            let _ = write!(out, "{f:.16e},");
        }
        let _ = writeln!(out, "{}", s.label);
    }
    out
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<LabeledSet> {
    let text = fs::read_to_string(path)?;
    parse_csv_string(&text)
}

pub fn parse_csv_string(text: &str) -> Result<LabeledSet> {
    let parse_err = |line: usize, message: String| Error::Parse { line, message };
    let mut lines = text.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file".into()))?;
    if !header.starts_with(CSV_MAGIC) {
        return Err(parse_err(1, format!("expected `{CSV_MAGIC}` header")));
    }
    let mut dim: Option<usize> = None;
    let mut generator = String::new();
    let mut seed: u64 = 0;
    for field in header.split(';').skip(1) {
        let field = field.trim();
        if let Some(v) = field.strip_prefix("dim=") {
            dim = Some(
                v.parse()
                    .map_err(|_| parse_err(1, format!("bad dim `{v}`")))?,
            );
        } else if let Some(v) = field.strip_prefix("generator=") {
            generator = v.to_string();
        } else if let Some(v) = field.strip_prefix("seed=") {
            seed = v
                .parse()
                .map_err(|_| parse_err(1, format!("bad seed `{v}`")))?;
        }
    }
    let dim = dim.ok_or_else(|| parse_err(1, "header missing dim".into()))?;

    let mut samples = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 1 {
            return Err(parse_err(
                lineno,
                format!("expected {} fields, found {}", dim + 1, fields.len()),
            ));
        }
        let mut features = Vec::with_capacity(dim);
        for f in &fields[..dim] {
            let v: f64 = f
                .trim()
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad number `{f}`")))?;
            if !v.is_finite() {
                return Err(parse_err(lineno, format!("non-finite value `{f}`")));
            }
            features.push(v);
        }
        let label: u8 = fields[dim]
            .trim()
            .parse()
            .map_err(|_| parse_err(lineno, format!("bad label `{}`", fields[dim])))?;
        if label > 1 {
            return Err(parse_err(lineno, format!("label out of range: {label}")));
        }
        samples.push(LabeledSample {
            features,
            label,
            radius: None,
        });
    }
    if samples.is_empty() {
        return Err(parse_err(1, "no data rows".into()));
    }
    LabeledSet::new(samples, dim, Provenance { generator, seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spirals_first_pair_hand_values() {
        let set = gen_two_spirals();
        // n = 1: r = 0.4, α = 0.
        assert!((set.samples[0].features[0] - 0.5).abs() < 1e-12);
        assert!((set.samples[0].features[1] - 0.9).abs() < 1e-12);
        assert_eq!(set.samples[0].label, 1);
        assert!((set.samples[1].features[0] - 0.5).abs() < 1e-12);
        assert!((set.samples[1].features[1] - 0.1).abs() < 1e-12);
        assert_eq!(set.samples[1].label, 0);
    }

    #[test]
    fn spirals_last_pair_hand_values() {
        let set = gen_two_spirals();
        // n = 97: r = 0.4·8/104, α = 6π.
        let r = 0.4 * 8.0 / 104.0;
        let p = &set.samples[192];
        assert!((p.features[0] - 0.5).abs() < 1e-12);
        assert!((p.features[1] - (0.5 + r)).abs() < 1e-12);
        assert!((p.radius.unwrap() - r).abs() < 1e-15);
    }

    #[test]
    fn spirals_count_symmetry_and_bounds() {
        let set = gen_two_spirals();
        assert_eq!(set.len(), 194);
        let ones = set.samples.iter().filter(|s| s.label == 1).count();
        assert_eq!(ones, 97);
        for pair in set.samples.chunks(2) {
            // The even point is the exact reflection of the odd one.
            assert_eq!(pair[1].features[0], 1.0 - pair[0].features[0]);
            assert_eq!(pair[1].features[1], 1.0 - pair[0].features[1]);
        }
        for s in &set.samples {
            assert!(s.features.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn spirals_is_closed_form_deterministic() {
        assert_eq!(gen_two_spirals(), gen_two_spirals());
    }

    #[test]
    fn rings_counts_and_radii() {
        let mut rng = RandomSource::new(3);
        let set = gen_rings(&mut rng, false);
        assert_eq!(set.len(), 240);
        assert_eq!(set.samples.iter().filter(|s| s.label == 1).count(), 120);
        for (i, s) in set.samples.iter().enumerate() {
            let ring = i / RING_POINTS;
            let dx = s.features[0] - 0.5;
            let dy = s.features[1] - 0.5;
            let dist = (dx * dx + dy * dy).sqrt();
            assert!((dist - RING_RADII[ring]).abs() < 1e-12);
            assert_eq!(s.label, if ring % 2 == 0 { 1 } else { 0 });
        }
        // Innermost ring point at θ = 0.
        assert!((set.samples[0].features[0] - 0.6).abs() < 1e-15);
        assert!((set.samples[0].features[1] - 0.5).abs() < 1e-15);
        assert_eq!(set.samples[0].label, 1);
    }

    #[test]
    fn rings_strictly_ordered_by_ring() {
        let mut rng = RandomSource::new(4);
        let set = gen_rings(&mut rng, true);
        let dist = |s: &LabeledSample| {
            let dx = s.features[0] - 0.5;
            let dy = s.features[1] - 0.5;
            (dx * dx + dy * dy).sqrt()
        };
        for ring in 0..3 {
            let this = &set.samples[ring * RING_POINTS..(ring + 1) * RING_POINTS];
            let next = &set.samples[(ring + 1) * RING_POINTS..(ring + 2) * RING_POINTS];
            let max_this = this.iter().map(|s| dist(s)).fold(0.0, f64::max);
            let min_next = next.iter().map(|s| dist(s)).fold(f64::INFINITY, f64::min);
            assert!(max_this < min_next);
        }
    }

    #[test]
    fn textures_range_balance_determinism() {
        let mut a = RandomSource::new(21);
        let set = gen_texture_patches(&mut a, 4, 12).unwrap();
        assert_eq!(set.len(), 8);
        assert_eq!(set.feature_dim, 144);
        for s in &set.samples {
            assert!(s.features.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
        assert_eq!(set.samples.iter().filter(|s| s.label == 0).count(), 4);

        let mut b = RandomSource::new(21);
        assert_eq!(gen_texture_patches(&mut b, 4, 12).unwrap(), set);
    }

    #[test]
    fn texture_rejects_zero_count() {
        let mut rng = RandomSource::new(1);
        assert!(gen_texture_patches(&mut rng, 0, 8).is_err());
    }

    #[test]
    fn csv_roundtrip_spirals_bit_exact() {
        let set = gen_two_spirals();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("spirals.csv");
        save_csv(&set, &path).unwrap();
        let loaded = load_csv(&path).unwrap();
        assert_eq!(loaded.feature_dim, set.feature_dim);
        assert_eq!(loaded.provenance, set.provenance);
        assert_eq!(loaded.len(), set.len());
        for (a, b) in loaded.samples.iter().zip(&set.samples) {
            assert_eq!(a.features, b.features, "bit-exact feature round trip");
            assert_eq!(a.label, b.label);
        }
    }

    #[test]
    fn csv_empty_file_is_parse_error() {
        assert!(matches!(
            parse_csv_string(""),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn csv_malformed_row_reports_line() {
        let text = "# quadnet-dataset v1; dim=2; generator=t; seed=0\n0.1,0.2,1\n0.3,oops,0\n";
        match parse_csv_string(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn csv_rejects_wrong_field_count() {
        let text = "# quadnet-dataset v1; dim=2; generator=t; seed=0\n0.1,1\n";
        assert!(matches!(parse_csv_string(text), Err(Error::Parse { line: 2, .. })));
    }
}
