//! Assembly text format: one labeled instruction per line, `#` comments.
//!
//! ```text
//! 1: set Z2 = 1
//! 2: add Z1 = Z1 + Z2
//! 3: eq Z1 -> 4, 2
//! 4: halt
//! ```
//!
//! Labels must be the consecutive integers `1..=n` in order. The `set`
//! operand accepts any exact value text (`0`/`1` in the restricted
//! dialects; anything else pushes the inferred dialect to the
//! full-constant class).

use std::fmt;

use super::{Instruction, Label, Program, ProgramError};
use crate::reals::RealValue;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    LabelMismatch { expected: Label, found: Label },
    UndefinedLabel(Label),
    IndexRegisterOutOfRange,
    Program(ProgramError),
}

/// Syntax or structural error with its source position (1-based).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: ", self.line, self.col)?;
        match &self.kind {
            ParseErrorKind::Syntax(msg) => write!(f, "{}", msg),
            ParseErrorKind::LabelMismatch { expected, found } => {
                write!(f, "labels must be consecutive: expected {}, found {}", expected, found)
            }
            ParseErrorKind::UndefinedLabel(l) => write!(f, "jump to undefined label {}", l),
            ParseErrorKind::IndexRegisterOutOfRange => {
                write!(f, "register subscripts start at 1")
            }
            ParseErrorKind::Program(e) => write!(f, "{}", e),
        }
    }
}

impl std::error::Error for ParseError {}

struct LineCursor<'a> {
    line_no: usize,
    src: &'a str,
    pos: usize,
}

impl<'a> LineCursor<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            line: self.line_no,
            col: self.pos + 1,
            kind: ParseErrorKind::Syntax(msg.into()),
        })
    }

    fn err_kind<T>(&self, kind: ParseErrorKind) -> Result<T, ParseError> {
        Err(ParseError { line: self.line_no, col: self.pos + 1, kind })
    }

    fn bytes(&self) -> &'a [u8] {
        self.src.as_bytes()
    }

    fn peek(&self) -> Option<u8> {
        self.bytes().get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ') | Some(b'\t')) {
            self.pos += 1;
        }
    }

    fn expect(&mut self, token: &str) -> Result<(), ParseError> {
        self.skip_ws();
        if self.src[self.pos..].starts_with(token) {
            self.pos += token.len();
            Ok(())
        } else {
            self.err(format!("expected `{}`", token))
        }
    }

    fn number(&mut self) -> Result<u64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
        }
        if self.pos == start {
            return self.err("expected a number");
        }
        self.src[start..self.pos]
            .parse::<u64>()
            .map_err(|_| ParseError {
                line: self.line_no,
                col: start + 1,
                kind: ParseErrorKind::Syntax("number out of range".into()),
            })
    }

    fn word(&mut self) -> Result<&'a str, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphabetic()) {
            self.pos += 1;
        }
        if self.pos == start {
            return self.err("expected an instruction mnemonic");
        }
        Ok(&self.src[start..self.pos])
    }

    /// `Z<n>` or `I<n>` with subscript >= 1.
    fn subscript(&mut self, prefix: u8) -> Result<u32, ParseError> {
        self.skip_ws();
        if self.peek() != Some(prefix) {
            return self.err(format!("expected `{}<n>`", prefix as char));
        }
        self.pos += 1;
        let n = self.number()?;
        if n == 0 || n > u32::MAX as u64 {
            return self.err_kind(ParseErrorKind::IndexRegisterOutOfRange);
        }
        Ok(n as u32)
    }

    fn label_pair(&mut self) -> Result<(Label, Label), ParseError> {
        self.expect("->")?;
        let l1 = self.number_as_label()?;
        self.expect(",")?;
        let l2 = self.number_as_label()?;
        Ok((l1, l2))
    }

    fn number_as_label(&mut self) -> Result<Label, ParseError> {
        let n = self.number()?;
        if n > u32::MAX as u64 {
            return self.err("label out of range");
        }
        Ok(n as Label)
    }

    fn end(&mut self) -> Result<(), ParseError> {
        self.skip_ws();
        if self.pos != self.src.len() {
            return self.err("trailing input after instruction");
        }
        Ok(())
    }

    fn set_value(&mut self) -> Result<RealValue, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let text = self.src[start..].trim_end();
        match text.parse::<RealValue>() {
            Ok(v) => {
                self.pos = self.src.len();
                Ok(v)
            }
            Err(e) => Err(ParseError {
                line: self.line_no,
                col: start + e.pos + 1,
                kind: ParseErrorKind::Syntax(e.msg),
            }),
        }
    }

    fn instruction(&mut self) -> Result<Instruction, ParseError> {
        let mnemonic = self.word()?;
        let instr = match mnemonic {
            "add" | "sub" => {
                let dst = self.subscript(b'Z')?;
                self.expect("=")?;
                let lhs = self.subscript(b'Z')?;
                self.expect(if mnemonic == "add" { "+" } else { "-" })?;
                let rhs = self.subscript(b'Z')?;
                if mnemonic == "add" {
                    Instruction::AddReg { dst, lhs, rhs }
                } else {
                    Instruction::SubReg { dst, lhs, rhs }
                }
            }
            "set" => {
                let dst = self.subscript(b'Z')?;
                self.expect("=")?;
                let value = self.set_value()?;
                Instruction::SetConst { dst, value }
            }
            "eq" => {
                let reg = self.subscript(b'Z')?;
                let (if_zero, otherwise) = self.label_pair()?;
                Instruction::EqTest { reg, if_zero, otherwise }
            }
            "ge" => {
                let reg = self.subscript(b'Z')?;
                let (if_nonneg, otherwise) = self.label_pair()?;
                Instruction::GeTest { reg, if_nonneg, otherwise }
            }
            "copy" => {
                self.expect("Z[")?;
                let dst = self.subscript(b'I')?;
                self.expect("]")?;
                self.expect("=")?;
                self.expect("Z[")?;
                let src = self.subscript(b'I')?;
                self.expect("]")?;
                Instruction::CopyIndirect { dst, src }
            }
            "idx" => {
                let idx = self.subscript(b'I')?;
                self.expect("=")?;
                self.expect("1")?;
                Instruction::IndexSet { idx }
            }
            "inc" => {
                let idx = self.subscript(b'I')?;
                Instruction::IndexInc { idx }
            }
            "ieq" => {
                let lhs = self.subscript(b'I')?;
                self.expect(",")?;
                let rhs = self.subscript(b'I')?;
                let (if_eq, otherwise) = self.label_pair()?;
                Instruction::IndexTest { lhs, rhs, if_eq, otherwise }
            }
            "oracle" => {
                let (if_member, otherwise) = self.label_pair()?;
                Instruction::OracleTest { if_member, otherwise }
            }
            "halt" => Instruction::Halt,
            other => return self.err(format!("unknown mnemonic `{}`", other)),
        };
        Ok(instr)
    }
}

/// Parses the assembly text form; the inverse of `Program`'s `Display`.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut instructions = Vec::new();
    let mut source_lines = Vec::new();
    for (line_idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(k) => &raw[..k],
            None => raw,
        };
        if line.trim().is_empty() {
            continue;
        }
        let mut cur = LineCursor { line_no: line_idx + 1, src: line, pos: 0 };
        let label = cur.number_as_label()?;
        let expected = instructions.len() as Label + 1;
        if label != expected {
            return cur.err_kind(ParseErrorKind::LabelMismatch { expected, found: label });
        }
        cur.expect(":")?;
        let instr = cur.instruction()?;
        cur.end()?;
        instructions.push(instr);
        source_lines.push(line_idx + 1);
    }
    // Jump-target validation here keeps line information in the error.
    let count = instructions.len() as Label;
    for (pos, instr) in instructions.iter().enumerate() {
        for target in instr.jump_targets() {
            if target == 0 || target > count {
                return Err(ParseError {
                    line: source_lines[pos],
                    col: 1,
                    kind: ParseErrorKind::UndefinedLabel(target),
                });
            }
        }
    }
    Program::new(instructions).map_err(|e| {
        let line = match &e {
            ProgramError::TrailingFallthrough { at } | ProgramError::UndefinedLabel { at, .. } => {
                source_lines.get(*at as usize - 1).copied().unwrap_or(1)
            }
            _ => source_lines.last().copied().unwrap_or(1),
        };
        ParseError { line, col: 1, kind: ParseErrorKind::Program(e) }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::machine::{Dialect, DialectBase};

    #[test]
    fn smallest_program() {
        let p = parse_program("1: halt").unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.dialect(), Dialect::ADD_EQ);
        assert_eq!(p, Program::trivial());
    }

    #[test]
    fn ge_promotes_dialect() {
        let p = parse_program("1: ge Z1 -> 2, 3\n2: halt\n3: halt").unwrap();
        assert_eq!(p.dialect().base, DialectBase::AddOrd);
        assert!(!p.dialect().oracle);
    }

    #[test]
    fn oracle_and_full_constants() {
        let p = parse_program("1: oracle -> 2, 2\n2: halt").unwrap();
        assert_eq!(p.dialect(), Dialect::with_oracle(DialectBase::AddEq));

        let q = parse_program("1: set Z1 = 1/2\n2: halt").unwrap();
        assert_eq!(q.dialect().base, DialectBase::AddFull);

        let r = parse_program("1: set Z1 = sqrt(2)\n2: halt").unwrap();
        assert_eq!(r.dialect().base, DialectBase::AddFull);
    }

    #[test]
    fn undefined_label_is_reported() {
        let err = parse_program("1: eq Z1 -> 99, 2\n2: halt").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UndefinedLabel(99));
        assert_eq!(err.line, 1);
    }

    #[test]
    fn label_mismatch_is_reported() {
        let err = parse_program("1: halt\n3: halt").unwrap_err();
        assert_eq!(
            err.kind,
            ParseErrorKind::LabelMismatch { expected: 2, found: 3 }
        );
    }

    #[test]
    fn zero_subscript_is_out_of_range() {
        let err = parse_program("1: inc I0\n2: halt").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::IndexRegisterOutOfRange);
    }

    #[test]
    fn fallthrough_past_end_rejected() {
        let err = parse_program("1: add Z1 = Z1 + Z1").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Program(ProgramError::TrailingFallthrough { .. })));
    }

    #[test]
    fn syntax_error_carries_position() {
        let err = parse_program("1: bogus Z1").unwrap_err();
        assert_eq!(err.line, 1);
        assert!(matches!(err.kind, ParseErrorKind::Syntax(_)));
    }

    #[test]
    fn comments_and_blanks_are_ignored() {
        let p = parse_program("# header\n\n1: halt # trailing\n").unwrap();
        assert_eq!(p.len(), 1);
    }

    #[test]
    fn display_round_trip() {
        let text = "1: set Z2 = 1\n2: add Z1 = Z1 + Z2\n3: sub Z3 = Z1 - Z2\n4: eq Z3 -> 6, 5\n5: ge Z1 -> 2, 6\n6: copy Z[I1] = Z[I2]\n7: idx I1 = 1\n8: inc I2\n9: ieq I1, I2 -> 10, 2\n10: oracle -> 11, 11\n11: halt\n";
        let p = parse_program(text).unwrap();
        assert_eq!(p.to_string(), text);
        assert_eq!(parse_program(&p.to_string()).unwrap(), p);
    }
}
