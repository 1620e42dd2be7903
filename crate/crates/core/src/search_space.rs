//! The discrete architecture space: a fixed ResNet skeleton whose per-block
//! `conv1` kernel is chosen from a small set of odd sizes.
//!
//! A [`Genotype`] holds one choice index per block, stage-major and
//! block-minor. Architectures are numbered by reading the genotype as a
//! base-`n_choices` string with slot 0 as the most significant digit.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// One selectable kernel for a block's first convolution. Padding keeps the
/// spatial size ("same" convolution).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KernelChoice {
    pub index: u8,
    pub kernel: u32,
    pub padding: u32,
}

impl KernelChoice {
    pub fn new(index: u8, kernel: u32) -> Result<Self> {
        if kernel == 0 || kernel.is_multiple_of(2) {
            return Err(Error::InvalidSpace(format!(
                "kernel size must be a positive odd integer, got {kernel}"
            )));
        }
        Ok(Self {
            index,
            kernel,
            padding: (kernel - 1) / 2,
        })
    }

    /// The 3x3 / 5x5 / 7x7 choice set.
    pub fn standard() -> Vec<KernelChoice> {
        [3, 5, 7]
            .iter()
            .enumerate()
            .map(|(i, &k)| KernelChoice::new(i as u8, k).unwrap())
            .collect()
    }
}

/// Kernel-choice indices, one per residual block.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Genotype(Vec<u8>);

impl Genotype {
    pub fn new(slots: Vec<u8>) -> Self {
        Genotype(slots)
    }

    pub fn uniform(len: usize, value: u8) -> Self {
        Genotype(vec![value; len])
    }

    pub fn slots(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn hamming(&self, other: &Genotype) -> usize {
        self.0
            .iter()
            .zip(&other.0)
            .filter(|(a, b)| a != b)
            .count()
            + self.0.len().abs_diff(other.0.len())
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }
}

impl From<Vec<u8>> for Genotype {
    fn from(slots: Vec<u8>) -> Self {
        Genotype(slots)
    }
}

impl fmt::Display for Genotype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// Parses the digit-string form, e.g. `"012012012"`. Range checking against a
/// particular space happens in [`SpaceSpec::validate_genotype`].
impl FromStr for Genotype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::InvalidGenotype("empty genotype string".into()));
        }
        s.chars()
            .map(|c| {
                c.to_digit(10).map(|d| d as u8).ok_or_else(|| {
                    Error::InvalidGenotype(format!("'{c}' is not a digit in \"{s}\""))
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(Genotype)
    }
}

impl Serialize for Genotype {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Genotype {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Structural description of the ResNet family being searched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub stem_in_channels: u64,
    pub stem_out_channels: u64,
    pub stage_widths: Vec<u64>,
    pub blocks_per_stage: Vec<usize>,
    pub stage_strides: Vec<u64>,
    pub num_classes: u64,
    pub choices: Vec<KernelChoice>,
    pub input_resolution: u64,
}

impl Default for SpaceSpec {
    /// Three stages of three blocks at widths 16/32/64 on 32x32 RGB input,
    /// ten classes: 3^9 = 19,683 architectures.
    fn default() -> Self {
        SpaceSpec {
            stem_in_channels: 3,
            stem_out_channels: 16,
            stage_widths: vec![16, 32, 64],
            blocks_per_stage: vec![3, 3, 3],
            stage_strides: vec![1, 2, 2],
            num_classes: 10,
            choices: KernelChoice::standard(),
            input_resolution: 32,
        }
    }
}

impl SpaceSpec {
    /// One stride-1 stage of `blocks` blocks at width 16 with the default
    /// stem and choices. Small enough for exhaustive checks.
    pub fn single_stage(blocks: usize) -> Self {
        SpaceSpec {
            stage_widths: vec![16],
            blocks_per_stage: vec![blocks],
            stage_strides: vec![1],
            ..SpaceSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpace(m));
        if self.stage_widths.is_empty() {
            return bad("at least one stage is required".into());
        }
        if self.stage_widths.len() != self.blocks_per_stage.len()
            || self.stage_widths.len() != self.stage_strides.len()
        {
            return bad("stage_widths, blocks_per_stage and stage_strides differ in length".into());
        }
        if self.stage_widths.contains(&0)
            || self.blocks_per_stage.contains(&0)
            || self.stage_strides.contains(&0)
        {
            return bad("widths, block counts and strides must be positive".into());
        }
        if self.stem_in_channels == 0
            || self.stem_out_channels == 0
            || self.num_classes == 0
            || self.input_resolution == 0
        {
            return bad("channel counts, classes and resolution must be positive".into());
        }
        if self.choices.len() < 2 || self.choices.len() > 10 {
            return bad(format!(
                "between 2 and 10 kernel choices are supported, got {}",
                self.choices.len()
            ));
        }
        for (i, c) in self.choices.iter().enumerate() {
            if c.index as usize != i {
                return bad(format!("choice {i} carries index {}", c.index));
            }
            if c.kernel == 0 || c.kernel.is_multiple_of(2) || c.padding != (c.kernel - 1) / 2 {
                return bad(format!("choice {i} has kernel {} / padding {}", c.kernel, c.padding));
            }
        }
        // 10^slots must fit comfortably in a u64 arch id.
        if self.num_slots() > 18 {
            return bad(format!("{} slots exceed the arch id range", self.num_slots()));
        }
        Ok(())
    }

    pub fn num_slots(&self) -> usize {
        self.blocks_per_stage.iter().sum()
    }

    pub fn num_choices(&self) -> usize {
        self.choices.len()
    }

    /// Number of distinct architectures, `n_choices ^ n_slots`.
    pub fn size(&self) -> u64 {
        (self.num_choices() as u64).pow(self.num_slots() as u32)
    }

    pub fn validate_genotype(&self, g: &Genotype) -> Result<()> {
        if g.len() != self.num_slots() {
            return Err(Error::InvalidGenotype(format!(
                "expected {} slots, got {}",
                self.num_slots(),
                g.len()
            )));
        }
        if let Some((i, v)) = g
            .slots()
            .iter()
            .enumerate()
            .find(|(_, &v)| v as usize >= self.num_choices())
        {
            return Err(Error::InvalidGenotype(format!(
                "slot {i} holds {v}, allowed 0..{}",
                self.num_choices() - 1
            )));
        }
        Ok(())
    }

    /// Parses and range-checks the digit-string form.
    pub fn parse_genotype(&self, s: &str) -> Result<Genotype> {
        let g: Genotype = s.parse()?;
        self.validate_genotype(&g)?;
        Ok(g)
    }

    pub fn kernels(&self, g: &Genotype) -> Vec<u32> {
        g.slots()
            .iter()
            .map(|&v| self.choices[v as usize].kernel)
            .collect()
    }

    pub fn encode(&self, g: &Genotype) -> Result<u64> {
        self.validate_genotype(g)?;
        let base = self.num_choices() as u64;
        Ok(g.slots().iter().fold(0, |acc, &v| acc * base + v as u64))
    }

    pub fn decode(&self, arch_id: u64) -> Result<Genotype> {
        let size = self.size();
        if arch_id >= size {
            return Err(Error::InvalidArchId { id: arch_id, size });
        }
        let base = self.num_choices() as u64;
        let mut slots = vec![0u8; self.num_slots()];
        let mut rest = arch_id;
        for slot in slots.iter_mut().rev() {
            *slot = (rest % base) as u8;
            rest /= base;
        }
        Ok(Genotype(slots))
    }

    /// Every genotype, in arch id order.
    pub fn enumerate(&self) -> impl Iterator<Item = Genotype> + '_ {
        (0..self.size()).map(move |id| self.decode(id).expect("id below space size"))
    }

    /// Each slot independently uniform over the choices.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Genotype {
        let n = self.num_choices() as u8;
        Genotype((0..self.num_slots()).map(|_| rng.gen_range(0..n)).collect())
    }

    /// Reassigns one uniformly chosen slot to a uniformly chosen *different*
    /// value.
    pub fn mutate_one_slot<R: Rng + ?Sized>(&self, g: &Genotype, rng: &mut R) -> Genotype {
        let mut slots = g.slots().to_vec();
        let slot = rng.gen_range(0..slots.len());
        let current = slots[slot];
        let mut v = rng.gen_range(0..self.num_choices() as u8 - 1);
        if v >= current {
            v += 1;
        }
        slots[slot] = v;
        Genotype(slots)
    }
}
