//! Key geometry on the surface plane and per-key touch distributions.
//!
//! Coordinates are millimetres with the origin halfway between the F and G
//! key centers, x to the right and y towards the digits row.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{fit_gaussian, Gaussian2, Mat2, Vec2, DEFAULT_REG_EPSILON};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Key {
    pub id: char,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl Key {
    pub fn center(&self) -> Vec2 {
        [self.cx, self.cy]
    }

    /// Inclusive on the min edges, exclusive on the max edges.
    pub fn contains(&self, p: Vec2) -> bool {
        let (x0, y0) = (self.cx - self.w / 2.0, self.cy - self.h / 2.0);
        p[0] >= x0 && p[0] < x0 + self.w && p[1] >= y0 && p[1] < y0 + self.h
    }

    fn overlaps(&self, other: &Key) -> bool {
        let dx = (self.cx - other.cx).abs();
        let dy = (self.cy - other.cy).abs();
        dx < (self.w + other.w) / 2.0 && dy < (self.h + other.h) / 2.0
    }
}

/// Row placement of the default QWERTY layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayoutParams {
    /// Center-to-center key distance (mm).
    pub pitch: f64,
    /// Gap between neighboring key caps (mm).
    pub gap: f64,
    /// Row offsets in pitches, relative to the q–p row.
    pub digits_offset: f64,
    pub home_offset: f64,
    pub bottom_offset: f64,
    /// Space bar width in pitches.
    pub space_width: f64,
}

impl Default for LayoutParams {
    fn default() -> Self {
        LayoutParams {
            pitch: 19.0,
            gap: 2.0,
            digits_offset: -0.5,
            home_offset: 0.25,
            bottom_offset: 0.75,
            space_width: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyboardLayout {
    pub pitch: f64,
    pub keys: Vec<Key>,
}

const ROWS: [&str; 4] = ["1234567890", "qwertyuiop", "asdfghjkl", "zxcvbnm,."];

impl KeyboardLayout {
    pub fn new(pitch: f64, keys: Vec<Key>) -> Result<Self> {
        let layout = KeyboardLayout { pitch, keys };
        layout.validate()?;
        Ok(layout)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pitch > 0.0) {
            return Err(Error::InvalidInput(format!("pitch {} must be positive", self.pitch)));
        }
        let mut seen = HashSet::new();
        for k in &self.keys {
            if !seen.insert(k.id) {
                return Err(Error::InvalidInput(format!("duplicate key id {:?}", k.id)));
            }
            if !(k.w > 0.0 && k.h > 0.0) {
                return Err(Error::InvalidInput(format!("key {:?} has nonpositive size", k.id)));
            }
        }
        for (i, a) in self.keys.iter().enumerate() {
            if let Some(b) = self.keys[i + 1..].iter().find(|b| a.overlaps(b)) {
                return Err(Error::InvalidInput(format!(
                    "keys {:?} and {:?} overlap",
                    a.id, b.id
                )));
            }
        }
        Ok(())
    }

    pub fn key(&self, id: char) -> Option<&Key> {
        self.keys.iter().find(|k| k.id == id)
    }

    pub fn ids(&self) -> impl Iterator<Item = char> + '_ {
        self.keys.iter().map(|k| k.id)
    }

    /// Axis-aligned bounding box `(min, max)` of all key caps.
    pub fn bounds(&self) -> (Vec2, Vec2) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for k in &self.keys {
            lo[0] = lo[0].min(k.cx - k.w / 2.0);
            lo[1] = lo[1].min(k.cy - k.h / 2.0);
            hi[0] = hi[0].max(k.cx + k.w / 2.0);
            hi[1] = hi[1].max(k.cy + k.h / 2.0);
        }
        (lo, hi)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let layout: KeyboardLayout = serde_json::from_str(text)?;
        layout.validate()?;
        Ok(layout)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("layout serializes")
    }
}

/// QWERTY with digits, comma, period and a space bar.
pub fn default_layout() -> KeyboardLayout {
    layout_with(&LayoutParams::default())
}

pub fn layout_with(params: &LayoutParams) -> KeyboardLayout {
    let p = params.pitch;
    let size = p - params.gap;
    let offsets = [
        params.digits_offset,
        0.0,
        params.home_offset,
        params.bottom_offset,
    ];
    // F is the fourth home-row key; shift so the F/G midpoint lands on x = 0.
    let origin_x = params.home_offset + 3.5;
    let mut keys = Vec::new();
    for (row, (chars, offset)) in ROWS.iter().zip(offsets).enumerate() {
        let y = (2.0 - row as f64) * p;
        for (i, id) in chars.chars().enumerate() {
            keys.push(Key {
                id,
                cx: (i as f64 + offset - origin_x) * p,
                cy: y,
                w: size,
                h: size,
            });
        }
    }
    let b = keys.iter().find(|k| k.id == 'b').map(|k| k.cx).unwrap_or(0.0);
    keys.push(Key {
        id: ' ',
        cx: b,
        cy: -2.0 * p,
        w: params.space_width * p - params.gap,
        h: size,
    });
    KeyboardLayout { pitch: p, keys }
}

/// Key whose center is closest to `point`; the smaller id wins ties.
pub fn nearest_key(layout: &KeyboardLayout, point: Vec2) -> Option<char> {
    let mut best: Option<(f64, char)> = None;
    for k in &layout.keys {
        let d = (k.cx - point[0]).powi(2) + (k.cy - point[1]).powi(2);
        best = match best {
            Some((bd, bid)) if bd < d || (bd == d && bid < k.id) => Some((bd, bid)),
            _ => Some((d, k.id)),
        };
    }
    best.map(|(_, id)| id)
}

/// Key whose cap contains `point`, if any.
pub fn contact_key(layout: &KeyboardLayout, point: Vec2) -> Option<char> {
    layout.keys.iter().find(|k| k.contains(point)).map(|k| k.id)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyModelEntry {
    pub id: char,
    pub mean: Vec2,
    pub cov: Mat2,
    /// Samples used for the fit; zero for the default prior.
    pub samples: usize,
}

/// Per-key touch distributions `p(x | key)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyTouchModel {
    models: BTreeMap<char, Gaussian2>,
    samples: BTreeMap<char, usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct KeyModelFile {
    keys: Vec<KeyModelEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub min_samples: usize,
    pub reg_epsilon: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            min_samples: 5,
            reg_epsilon: DEFAULT_REG_EPSILON,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitReport {
    /// Keys that fell back to the default prior.
    pub fallbacks: Vec<char>,
    /// Touches labelled with an id the layout does not have.
    pub unknown_touches: usize,
}

impl KeyTouchModel {
    /// Every key centered on its cap with isotropic σ = pitch / 4.
    pub fn default_prior(layout: &KeyboardLayout) -> Self {
        let var = (0.25 * layout.pitch).powi(2);
        let models = layout
            .keys
            .iter()
            .map(|k| (k.id, prior_for(k, var)))
            .collect();
        let samples = layout.keys.iter().map(|k| (k.id, 0)).collect();
        KeyTouchModel { models, samples }
    }

    pub fn from_entries(entries: Vec<KeyModelEntry>) -> Result<Self> {
        let mut models = BTreeMap::new();
        let mut samples = BTreeMap::new();
        for e in entries {
            let g = Gaussian2::new(e.mean, e.cov)?;
            if g.cov.inverse().is_none() {
                return Err(Error::InvalidCovariance(format!(
                    "key {:?} covariance is singular",
                    e.id
                )));
            }
            if models.insert(e.id, g).is_some() {
                return Err(Error::InvalidInput(format!("duplicate key model {:?}", e.id)));
            }
            samples.insert(e.id, e.samples);
        }
        Ok(KeyTouchModel { models, samples })
    }

    pub fn get(&self, id: char) -> Option<&Gaussian2> {
        self.models.get(&id)
    }

    pub fn sample_count(&self, id: char) -> usize {
        self.samples.get(&id).copied().unwrap_or(0)
    }

    /// Models in ascending key-id order.
    pub fn iter(&self) -> impl Iterator<Item = (char, &Gaussian2)> {
        self.models.iter().map(|(k, g)| (*k, g))
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    /// Checks that exactly the layout's keys are modelled.
    pub fn covers(&self, layout: &KeyboardLayout) -> bool {
        self.models.len() == layout.keys.len() && layout.ids().all(|id| self.models.contains_key(&id))
    }

    pub fn entries(&self) -> Vec<KeyModelEntry> {
        self.models
            .iter()
            .map(|(id, g)| KeyModelEntry {
                id: *id,
                mean: g.mean,
                cov: g.cov,
                samples: self.sample_count(*id),
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&KeyModelFile {
            keys: self.entries(),
        })
        .expect("key models serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: KeyModelFile = serde_json::from_str(text)?;
        Self::from_entries(file.keys)
    }
}

fn prior_for(key: &Key, var: f64) -> Gaussian2 {
    Gaussian2 {
        mean: key.center(),
        cov: Mat2::scaled_identity(var),
    }
}

/// Fits one Gaussian per key from labelled touches. Keys with fewer than
/// `opts.min_samples` touches keep the default prior.
pub fn fit_key_models(
    layout: &KeyboardLayout,
    touches: &[(char, Vec2)],
    opts: FitOptions,
) -> Result<(KeyTouchModel, FitReport)> {
    let mut per_key: BTreeMap<char, Vec<Vec2>> = layout.ids().map(|id| (id, Vec::new())).collect();
    let mut report = FitReport::default();
    for (id, p) in touches {
        match per_key.get_mut(id) {
            Some(v) => v.push(*p),
            None => report.unknown_touches += 1,
        }
    }
    let prior_var = (0.25 * layout.pitch).powi(2);
    let mut models = BTreeMap::new();
    let mut samples = BTreeMap::new();
    for key in &layout.keys {
        let pts = &per_key[&key.id];
        let g = if pts.len() >= opts.min_samples.max(2) {
            samples.insert(key.id, pts.len());
            fit_gaussian(pts, opts.reg_epsilon)?
        } else {
            report.fallbacks.push(key.id);
            samples.insert(key.id, 0);
            prior_for(key, prior_var)
        };
        models.insert(key.id, g);
    }
    Ok((KeyTouchModel { models, samples }, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_between_f_and_g() {
        let l = default_layout();
        let f = l.key('f').unwrap();
        let g = l.key('g').unwrap();
        let j = l.key('j').unwrap();
        assert!(f.cx < 0.0 && j.cx > 0.0);
        assert!((g.cx - 9.5).abs() < 1e-12 && g.cy == 0.0);
        assert!((f.cx + 9.5).abs() < 1e-12);
    }

    #[test]
    fn default_layout_vocabulary() {
        let l = default_layout();
        l.validate().unwrap();
        // 26 letters, 10 digits, comma, period, space.
        assert_eq!(l.keys.len(), 39);
        for c in ('a'..='z').chain('0'..='9').chain([' ', ',', '.']) {
            assert!(l.key(c).is_some(), "missing {c:?}");
        }
    }

    #[test]
    fn nearest_and_contact() {
        let l = default_layout();
        let k = l.key('k').unwrap().center();
        assert_eq!(nearest_key(&l, k), Some('k'));
        assert_eq!(contact_key(&l, k), Some('k'));
        assert_eq!(nearest_key(&l, [0.0, 0.0]), Some('f'));
        // Midway between f and g falls in the 2 mm gap.
        assert_eq!(contact_key(&l, [0.0, 0.0]), None);
        assert_eq!(contact_key(&l, [1000.0, 0.0]), None);
    }

    #[test]
    fn rejects_overlap_and_duplicates() {
        let k = Key { id: 'a', cx: 0.0, cy: 0.0, w: 10.0, h: 10.0 };
        let dup = KeyboardLayout::new(19.0, vec![k, k]);
        assert!(dup.is_err());
        let overlap = KeyboardLayout::new(19.0, vec![k, Key { id: 'b', cx: 5.0, ..k }]);
        assert!(overlap.is_err());
        let touching = KeyboardLayout::new(19.0, vec![k, Key { id: 'b', cx: 10.0, ..k }]);
        assert!(touching.is_ok());
    }

    #[test]
    fn empty_fit_is_all_prior() {
        let l = default_layout();
        let (m, report) = fit_key_models(&l, &[], FitOptions::default()).unwrap();
        assert_eq!(report.fallbacks.len(), l.keys.len());
        assert!(m.covers(&l));
        let q = m.get('q').unwrap();
        assert_eq!(q.mean, l.key('q').unwrap().center());
        assert_eq!(q.cov, Mat2::scaled_identity(4.75 * 4.75));
    }

    #[test]
    fn samples_at_centers_recover_centers() {
        let l = default_layout();
        let touches: Vec<_> = l
            .keys
            .iter()
            .flat_map(|k| std::iter::repeat((k.id, k.center())).take(6))
            .collect();
        let (m, report) = fit_key_models(&l, &touches, FitOptions::default()).unwrap();
        assert!(report.fallbacks.is_empty());
        for k in &l.keys {
            let g = m.get(k.id).unwrap();
            assert!((g.mean[0] - k.cx).abs() < 1e-9 && (g.mean[1] - k.cy).abs() < 1e-9);
            assert_eq!(g.cov, Mat2::scaled_identity(DEFAULT_REG_EPSILON));
            assert_eq!(m.sample_count(k.id), 6);
        }
    }

    #[test]
    fn json_round_trip() {
        let l = default_layout();
        assert_eq!(KeyboardLayout::from_json(&l.to_json()).unwrap(), l);
        let m = KeyTouchModel::default_prior(&l);
        assert_eq!(KeyTouchModel::from_json(&m.to_json()).unwrap(), m);
    }
}
