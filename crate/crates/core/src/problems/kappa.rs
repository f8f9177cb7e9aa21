//! The assembled square-root separator machine and the point formats
//! built on its code.

use std::sync::OnceLock;

use crate::encoding::{encode, BitString};
use crate::machine::{parse_program, Program};
use crate::reals::RealValue;

const KAPPA_TEXT: &str = include_str!("kappa.bss");

/// The order-dialect machine semi-deciding `{(i, x) : x != sqrt(p_i)}`,
/// shipped as a real program so its bit code can appear inside points.
pub fn kappa_program() -> &'static Program {
    static PROGRAM: OnceLock<Program> = OnceLock::new();
    PROGRAM.get_or_init(|| parse_program(KAPPA_TEXT).expect("bundled program parses"))
}

/// The bit code of the separator machine.
pub fn kappa_code() -> &'static BitString {
    static CODE: OnceLock<BitString> = OnceLock::new();
    CODE.get_or_init(|| encode(kappa_program()).expect("binary constants only"))
}

/// The point `(2, i, x, code)` with the separator's code flattened into
/// exact 0/1 components.
pub fn p_point(i: u64, x: RealValue) -> Vec<RealValue> {
    let mut point = Vec::with_capacity(3 + kappa_code().len());
    point.push(RealValue::from_integer(2));
    point.push(RealValue::from_integer(i as i64));
    point.push(x);
    point.extend(kappa_code().to_real_tuple());
    point
}

/// The halting-problem point `(n . x . code(program))`.
pub fn halting_point(
    input: &[RealValue],
    program: &Program,
) -> Result<Vec<RealValue>, crate::encoding::EncodeError> {
    let code = encode(program)?;
    let mut point = Vec::with_capacity(1 + input.len() + code.len());
    point.push(RealValue::from_integer(input.len() as i64));
    point.extend_from_slice(input);
    point.extend(code.to_real_tuple());
    Ok(point)
}
