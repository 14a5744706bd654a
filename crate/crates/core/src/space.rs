//! The discrete configuration action space.
//!
//! A configuration is a triple of axis indices: a reasoning instruction
//! (one cell of the base × variation grid), a sampling temperature, and a
//! step budget. The grid is row-major, so instruction `i` is base
//! `i / |variations|` joined with variation `i % |variations|`.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{read_to_string, Error, Result};

/// Smallest and largest step budget a space may offer.
pub const MIN_STEPS: u32 = 3;
pub const MAX_STEPS: u32 = 10;

pub const DEFAULT_BASE_INSTRUCTIONS: [&str; 10] = [
    "Break down your reasoning into clear, sequential steps.",
    "Systematically structure your analysis, elaborating on each step with thorough detail.",
    "Examine the logical connections between concepts and articulate each step in depth.",
    "Consider multiple perspectives and explore alternative viewpoints comprehensively.",
    "Apply creative reasoning to unearth unconventional insights and challenge standard assumptions.",
    "Adopt a detailed and rigorous approach, balancing specific details with overarching themes.",
    "Reflect on your assumptions and refine your argument through critical self-questioning and validation.",
    "Explain your reasoning step-by-step in a clear, accessible manner for all audiences.",
    "Include a systematic self-check and verification of your reasoning process to ensure consistency.",
    "Conclude by summarizing your key points and re-evaluating your final answer for completeness.",
];

pub const DEFAULT_VARIATION_INSTRUCTIONS: [&str; 10] = [
    "Thoroughly analyze all possible interpretations for comprehensive understanding.",
    "Decompose the problem into smaller, logical components for clarity and precision.",
    "Cross-reference reasoning with similar examples or prior cases for validation.",
    "Review and verify each step to ensure no key detail is overlooked.",
    "Challenge conventional thinking while maintaining logical soundness.",
    "Ensure every premise is clearly understood and meticulously applied.",
    "Pay close attention to minor details that might otherwise be neglected.",
    "Use simple, straightforward language to guarantee clarity and accessibility.",
    "Perform a detailed self-audit to detect and correct inconsistencies.",
    "Validate conclusions by aligning them with established principles or empirical data.",
];

/// One of the three factorized action axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Instruction,
    Temperature,
    Steps,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::Instruction, Axis::Temperature, Axis::Steps];

    pub fn name(self) -> &'static str {
        match self {
            Axis::Instruction => "instruction",
            Axis::Temperature => "temperature",
            Axis::Steps => "steps",
        }
    }

    /// Position of this axis in `[instruction, temperature, steps]` arrays.
    pub fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A joint configuration: one index per axis. This is the bandit arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ActionTriple {
    pub instruction_index: usize,
    pub temperature_index: usize,
    pub steps_index: usize,
}

impl ActionTriple {
    pub fn new(instruction_index: usize, temperature_index: usize, steps_index: usize) -> Self {
        Self {
            instruction_index,
            temperature_index,
            steps_index,
        }
    }

    pub fn index(&self, axis: Axis) -> usize {
        match axis {
            Axis::Instruction => self.instruction_index,
            Axis::Temperature => self.temperature_index,
            Axis::Steps => self.steps_index,
        }
    }

    pub fn as_array(&self) -> [usize; 3] {
        [
            self.instruction_index,
            self.temperature_index,
            self.steps_index,
        ]
    }

    pub fn from_array(indices: [usize; 3]) -> Self {
        Self::new(indices[0], indices[1], indices[2])
    }
}

impl fmt::Display for ActionTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {})",
            self.instruction_index, self.temperature_index, self.steps_index
        )
    }
}

/// A triple resolved against its space into concrete generation settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderedConfig {
    pub instruction_text: String,
    pub temperature: f64,
    pub steps: u32,
}

/// Axis sizes `[instructions, temperatures, steps]` of a space.
///
/// Kept separate from [`ActionSpace`] so simulators and oracles can work on
/// abstract grids without instruction text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisSizes(pub [usize; 3]);

impl AxisSizes {
    pub fn get(&self, axis: Axis) -> usize {
        self.0[axis.slot()]
    }

    pub fn cardinality(&self) -> usize {
        self.0.iter().product()
    }

    pub fn contains(&self, triple: &ActionTriple) -> bool {
        Axis::ALL
            .iter()
            .all(|&a| triple.index(a) < self.get(a))
    }

    pub fn check(&self, triple: &ActionTriple) -> Result<()> {
        for axis in Axis::ALL {
            let index = triple.index(axis);
            let len = self.get(axis);
            if index >= len {
                return Err(Error::Bounds { axis, index, len });
            }
        }
        Ok(())
    }

    /// Flat joint index `p·|T|·|S| + t·|S| + s`.
    pub fn flat_index(&self, triple: &ActionTriple) -> Result<usize> {
        self.check(triple)?;
        let [_, nt, ns] = self.0;
        Ok(triple.instruction_index * nt * ns + triple.temperature_index * ns + triple.steps_index)
    }

    pub fn triple_at(&self, flat: usize) -> Result<ActionTriple> {
        let total = self.cardinality();
        if flat >= total {
            return Err(Error::validation(format!(
                "flat index {flat} out of range for {total} joint actions"
            )));
        }
        let [_, nt, ns] = self.0;
        Ok(ActionTriple::new(flat / (nt * ns), (flat / ns) % nt, flat % ns))
    }

    /// All triples in flat-index order.
    pub fn triples(&self) -> impl Iterator<Item = ActionTriple> + '_ {
        let [np, nt, ns] = self.0;
        (0..np).flat_map(move |p| {
            (0..nt).flat_map(move |t| (0..ns).map(move |s| ActionTriple::new(p, t, s)))
        })
    }
}

/// The discretized configuration space. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpace", into = "RawSpace")]
pub struct ActionSpace {
    steps_values: Vec<u32>,
    temperature_values: Vec<f64>,
    base_instructions: Vec<String>,
    variation_instructions: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpace {
    steps_values: Vec<u32>,
    temperature_values: Vec<f64>,
    base_instructions: Vec<String>,
    variation_instructions: Vec<String>,
}

impl TryFrom<RawSpace> for ActionSpace {
    type Error = Error;

    fn try_from(raw: RawSpace) -> Result<Self> {
        ActionSpace::new(
            raw.steps_values,
            raw.temperature_values,
            raw.base_instructions,
            raw.variation_instructions,
        )
    }
}

impl From<ActionSpace> for RawSpace {
    fn from(space: ActionSpace) -> Self {
        RawSpace {
            steps_values: space.steps_values,
            temperature_values: space.temperature_values,
            base_instructions: space.base_instructions,
            variation_instructions: space.variation_instructions,
        }
    }
}

impl Default for ActionSpace {
    fn default() -> Self {
        Self::build_default()
    }
}

impl ActionSpace {
    pub fn new(
        steps_values: Vec<u32>,
        temperature_values: Vec<f64>,
        base_instructions: Vec<String>,
        variation_instructions: Vec<String>,
    ) -> Result<Self> {
        if steps_values.is_empty() {
            return Err(Error::validation("steps_values is empty"));
        }
        if steps_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::validation("steps_values must be strictly increasing"));
        }
        if let Some(bad) = steps_values
            .iter()
            .find(|s| !(MIN_STEPS..=MAX_STEPS).contains(*s))
        {
            return Err(Error::validation(format!(
                "step value {bad} outside [{MIN_STEPS}, {MAX_STEPS}]"
            )));
        }
        if temperature_values.is_empty() {
            return Err(Error::validation("temperature_values is empty"));
        }
        if let Some(bad) = temperature_values
            .iter()
            .find(|t| !t.is_finite() || **t < 0.0 || **t > 1.0)
        {
            return Err(Error::validation(format!(
                "temperature {bad} outside [0, 1]"
            )));
        }
        if temperature_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::validation(
                "temperature_values must be strictly increasing",
            ));
        }
        for (name, list) in [
            ("base_instructions", &base_instructions),
            ("variation_instructions", &variation_instructions),
        ] {
            if list.is_empty() {
                return Err(Error::validation(format!("{name} is empty")));
            }
            if list.iter().any(|s| s.trim().is_empty()) {
                return Err(Error::validation(format!("{name} contains empty text")));
            }
        }
        Ok(Self {
            steps_values,
            temperature_values,
            base_instructions,
            variation_instructions,
        })
    }

    /// Steps 3..=10, temperatures 0.0..=1.0 in 0.1 increments, and the
    /// 10 × 10 base/variation instruction grid.
    pub fn build_default() -> Self {
        Self {
            steps_values: (MIN_STEPS..=MAX_STEPS).collect(),
            temperature_values: (0..=10).map(|k| f64::from(k) / 10.0).collect(),
            base_instructions: DEFAULT_BASE_INSTRUCTIONS.iter().map(|s| s.to_string()).collect(),
            variation_instructions: DEFAULT_VARIATION_INSTRUCTIONS
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }

    /// Parse a TOML override file with the four `ActionSpace` keys.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawSpace =
            toml::from_str(text).map_err(|e| Error::format(format!("action space: {e}")))?;
        raw.try_into()
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&read_to_string(path)?)
    }

    pub fn steps_values(&self) -> &[u32] {
        &self.steps_values
    }

    pub fn temperature_values(&self) -> &[f64] {
        &self.temperature_values
    }

    pub fn base_instructions(&self) -> &[String] {
        &self.base_instructions
    }

    pub fn variation_instructions(&self) -> &[String] {
        &self.variation_instructions
    }

    pub fn num_instructions(&self) -> usize {
        self.base_instructions.len() * self.variation_instructions.len()
    }

    pub fn sizes(&self) -> AxisSizes {
        AxisSizes([
            self.num_instructions(),
            self.temperature_values.len(),
            self.steps_values.len(),
        ])
    }

    pub fn axis_len(&self, axis: Axis) -> usize {
        self.sizes().get(axis)
    }

    /// Joint cardinality `|A|`.
    pub fn cardinality(&self) -> usize {
        self.sizes().cardinality()
    }

    /// Text of instruction `index`: base, one space, variation.
    pub fn instruction_text(&self, index: usize) -> Result<String> {
        let len = self.num_instructions();
        if index >= len {
            return Err(Error::Bounds {
                axis: Axis::Instruction,
                index,
                len,
            });
        }
        let nv = self.variation_instructions.len();
        Ok(format!(
            "{} {}",
            self.base_instructions[index / nv],
            self.variation_instructions[index % nv]
        ))
    }

    pub fn resolve(&self, triple: &ActionTriple) -> Result<RenderedConfig> {
        self.sizes().check(triple)?;
        Ok(RenderedConfig {
            instruction_text: self.instruction_text(triple.instruction_index)?,
            temperature: self.temperature_values[triple.temperature_index],
            steps: self.steps_values[triple.steps_index],
        })
    }

    pub fn flat_index(&self, triple: &ActionTriple) -> Result<usize> {
        self.sizes().flat_index(triple)
    }

    pub fn triple_at(&self, flat: usize) -> Result<ActionTriple> {
        self.sizes().triple_at(flat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_cardinalities() {
        let space = ActionSpace::build_default();
        assert_eq!(space.sizes(), AxisSizes([100, 11, 8]));
        assert_eq!(space.cardinality(), 8800);
        assert_eq!(space.temperature_values()[0], 0.0);
        assert_eq!(space.temperature_values()[10], 1.0);
        assert_eq!(space.temperature_values()[3], 0.3);
        assert_eq!(space.steps_values()[0], 3);
        assert_eq!(space.steps_values()[7], 10);
    }

    #[test]
    fn resolve_first_and_last() {
        let space = ActionSpace::build_default();
        let first = space.resolve(&ActionTriple::new(0, 0, 0)).unwrap();
        assert_eq!(first.steps, 3);
        assert_eq!(first.temperature, 0.0);
        assert!(first
            .instruction_text
            .starts_with("Break down your reasoning into"));
        assert_eq!(
            first.instruction_text,
            "Break down your reasoning into clear, sequential steps. \
             Thoroughly analyze all possible interpretations for comprehensive understanding."
        );

        let last = space.resolve(&ActionTriple::new(0, 10, 7)).unwrap();
        assert_eq!(last.temperature, 1.0);
        assert_eq!(last.steps, 10);

        // row-major: instruction 13 is base 1, variation 3
        let cell = space.resolve(&ActionTriple::new(13, 0, 0)).unwrap();
        assert!(cell.instruction_text.starts_with("Systematically structure"));
        assert!(cell.instruction_text.ends_with("no key detail is overlooked."));
    }

    #[test]
    fn resolve_names_offending_axis() {
        let space = ActionSpace::build_default();
        let err = space.resolve(&ActionTriple::new(100, 0, 0)).unwrap_err();
        assert!(matches!(
            err,
            Error::Bounds {
                axis: Axis::Instruction,
                index: 100,
                len: 100
            }
        ));
        let err = space.resolve(&ActionTriple::new(0, 11, 0)).unwrap_err();
        assert!(err.to_string().contains("temperature"));
        let err = space.resolve(&ActionTriple::new(0, 0, 8)).unwrap_err();
        assert!(err.to_string().contains("steps"));
    }

    #[test]
    fn rejects_invalid_spaces() {
        let b = vec!["b".to_string()];
        let v = vec!["v".to_string()];
        assert!(ActionSpace::new(vec![3, 3], vec![0.5], b.clone(), v.clone()).is_err());
        assert!(ActionSpace::new(vec![2], vec![0.5], b.clone(), v.clone()).is_err());
        assert!(ActionSpace::new(vec![11], vec![0.5], b.clone(), v.clone()).is_err());
        assert!(ActionSpace::new(vec![3], vec![0.5, 0.5], b.clone(), v.clone()).is_err());
        assert!(ActionSpace::new(vec![3], vec![1.5], b.clone(), v.clone()).is_err());
        assert!(ActionSpace::new(vec![3], vec![f64::NAN], b.clone(), v.clone()).is_err());
        assert!(ActionSpace::new(vec![3], vec![0.5], vec![], v.clone()).is_err());
        assert!(ActionSpace::new(vec![3], vec![0.5], b.clone(), vec![" ".into()]).is_err());
        assert!(ActionSpace::new(vec![3], vec![0.5], b, v).is_ok());
    }

    #[test]
    fn toml_override() {
        let text = r#"
steps_values = [3, 5]
temperature_values = [0.0, 0.5, 1.0]
base_instructions = ["Think.", "Plan."]
variation_instructions = ["Check."]
"#;
        let space = ActionSpace::from_toml_str(text).unwrap();
        assert_eq!(space.sizes(), AxisSizes([2, 3, 2]));
        assert_eq!(space.instruction_text(1).unwrap(), "Plan. Check.");

        let bad = text.replace("[3, 5]", "[5, 3]");
        assert!(ActionSpace::from_toml_str(&bad).is_err());
        assert!(ActionSpace::from_toml_str("steps_values = [3]").is_err());
    }

    #[test]
    fn triples_enumerate_in_flat_order() {
        let sizes = AxisSizes([2, 3, 4]);
        for (flat, triple) in sizes.triples().enumerate() {
            assert_eq!(sizes.flat_index(&triple).unwrap(), flat);
        }
        assert_eq!(sizes.triples().count(), 24);
        assert!(sizes.triple_at(24).is_err());
    }

    proptest! {
        #[test]
        fn flat_index_round_trips(flat in 0usize..8800) {
            let space = ActionSpace::build_default();
            let triple = space.triple_at(flat).unwrap();
            prop_assert_eq!(space.flat_index(&triple).unwrap(), flat);
        }

        #[test]
        fn resolved_values_in_range(p in 0usize..100, t in 0usize..11, s in 0usize..8) {
            let space = ActionSpace::build_default();
            let cfg = space.resolve(&ActionTriple::new(p, t, s)).unwrap();
            prop_assert!((3..=10).contains(&cfg.steps));
            prop_assert!((0.0..=1.0).contains(&cfg.temperature));
            prop_assert_eq!(cfg.temperature, space.temperature_values()[t]);
            prop_assert_eq!(cfg.steps, space.steps_values()[s]);
        }

        #[test]
        fn resolve_is_injective(a in 0usize..8800, b in 0usize..8800) {
            let space = ActionSpace::build_default();
            let ra = space.resolve(&space.triple_at(a).unwrap()).unwrap();
            let rb = space.resolve(&space.triple_at(b).unwrap()).unwrap();
            prop_assert_eq!(a == b, ra == rb);
        }
    }
}
