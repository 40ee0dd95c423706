//! Search-based unit test generation.
//!
//! A unit under test is described by a metadata file. Test suites are
//! evolved as genotypes by a hill climber or a genetic algorithm, scored by
//! coverage-based fitness on a built-in interpreter (or an external pytest
//! run), and rendered as pytest modules.

pub mod cli;
pub mod derivative;
pub mod engines;
pub mod evaluate;
pub mod fitness;
pub mod genotype;
pub mod metadata;
pub mod minipy;
pub mod phenotype;
pub mod search_ops;

/// The bundled BMI calculator example.
pub mod fixtures {
    use crate::metadata::{parse_metadata, UutMetadata};
    use crate::minipy::{parse_program, Program};

    pub const BMI_METADATA: &str = include_str!("../fixtures/bmi.json");
    pub const BMI_SOURCE: &str = include_str!("../fixtures/example/bmi_calculator.mpy");
    pub const BMI_PYTHON: &str = include_str!("../fixtures/example/bmi_calculator.py");
    pub const SAMPLE_GENOTYPE: &str = include_str!("../fixtures/golden/sample_genotype.json");
    pub const SAMPLE_PHENOTYPE: &str = include_str!("../fixtures/golden/test_sample_genotype.py");

    pub fn bmi_metadata() -> UutMetadata {
        parse_metadata(BMI_METADATA).expect("bundled metadata parses")
    }

    pub fn bmi_program() -> Program {
        parse_program(BMI_SOURCE).expect("bundled source parses")
    }
}
