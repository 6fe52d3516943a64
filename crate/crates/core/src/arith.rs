//! Integer arithmetic shared by the IR evaluator and the reference oracle.
//!
//! Addition, subtraction and multiplication wrap on overflow. Division and
//! remainder truncate toward zero; a zero divisor is an error.

use crate::ir::{BinOp, CmpOp};

#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ArithError {
    #[error("division by zero")]
    DivisionByZero,
}

pub fn binop(op: BinOp, a: i64, b: i64) -> Result<i64, ArithError> {
    Ok(match op {
        BinOp::Add => a.wrapping_add(b),
        BinOp::Sub => a.wrapping_sub(b),
        BinOp::Mul => a.wrapping_mul(b),
        BinOp::Div => {
            if b == 0 {
                return Err(ArithError::DivisionByZero);
            }
            a.wrapping_div(b)
        }
        BinOp::Mod => {
            if b == 0 {
                return Err(ArithError::DivisionByZero);
            }
            a.wrapping_rem(b)
        }
        BinOp::Min => a.min(b),
    })
}

pub fn compare(op: CmpOp, a: i64, b: i64) -> bool {
    match op {
        CmpOp::Lt => a < b,
        CmpOp::Le => a <= b,
        CmpOp::Eq => a == b,
        CmpOp::Gt => a > b,
        CmpOp::Ge => a >= b,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncates_toward_zero() {
        assert_eq!(binop(BinOp::Div, -7, 2), Ok(-3));
        assert_eq!(binop(BinOp::Mod, -7, 2), Ok(-1));
        assert_eq!(binop(BinOp::Mod, 7, -2), Ok(1));
        assert_eq!(binop(BinOp::Div, 0, 0), Err(ArithError::DivisionByZero));
        assert_eq!(binop(BinOp::Mod, 5, 0), Err(ArithError::DivisionByZero));
    }

    #[test]
    fn grid_agrees_with_native_truncating_ops() {
        for a in -20i64..=20 {
            for b in -20i64..=20 {
                assert_eq!(binop(BinOp::Add, a, b), Ok(a + b));
                assert_eq!(binop(BinOp::Sub, a, b), Ok(a - b));
                assert_eq!(binop(BinOp::Mul, a, b), Ok(a * b));
                assert_eq!(binop(BinOp::Min, a, b), Ok(a.min(b)));
                if b == 0 {
                    assert!(binop(BinOp::Div, a, b).is_err());
                } else {
                    assert_eq!(binop(BinOp::Div, a, b), Ok(a / b));
                    assert_eq!(binop(BinOp::Mod, a, b), Ok(a % b));
                }
            }
        }
    }

    #[test]
    fn overflow_wraps() {
        assert_eq!(binop(BinOp::Add, i64::MAX, 1), Ok(i64::MIN));
        assert_eq!(binop(BinOp::Div, i64::MIN, -1), Ok(i64::MIN));
    }
}
