//! Arithmetic for numeric config fields, so values such as `"ln(4) + 0.04"`
//! or `"2000*2*pi/ln(4)"` can be written directly.
//!
//! Supports `+ - * / ^`, parentheses, `pi`, `e` and the functions `ln`,
//! `exp`, `sqrt`, `sin`, `cos`.

pub fn eval(text: &str) -> Result<f64, String> {
    let mut p = Calc { s: text.as_bytes(), pos: 0 };
    let v = p.sum()?;
    p.skip_ws();
    if p.pos != p.s.len() {
        return Err(format!("unexpected '{}' at {}", p.s[p.pos] as char, p.pos));
    }
    if !v.is_finite() {
        return Err(format!("'{text}' is not finite"));
    }
    Ok(v)
}

struct Calc<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Calc<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.s.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<f64, String> {
        let mut v = self.product()?;
        loop {
            if self.eat(b'+') {
                v += self.product()?;
            } else if self.eat(b'-') {
                v -= self.product()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn product(&mut self) -> Result<f64, String> {
        let mut v = self.unary()?;
        loop {
            if self.eat(b'*') {
                v *= self.unary()?;
            } else if self.eat(b'/') {
                v /= self.unary()?;
            } else {
                return Ok(v);
            }
        }
    }

    // -a^b is -(a^b)
    fn unary(&mut self) -> Result<f64, String> {
        if self.eat(b'-') {
            return Ok(-self.unary()?);
        }
        if self.eat(b'+') {
            return self.unary();
        }
        let base = self.atom()?;
        if self.eat(b'^') {
            return Ok(base.powf(self.unary()?));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<f64, String> {
        self.skip_ws();
        if self.eat(b'(') {
            let v = self.sum()?;
            if !self.eat(b')') {
                return Err(format!("missing ')' at {}", self.pos));
            }
            return Ok(v);
        }
        let start = self.pos;
        let Some(&c) = self.s.get(self.pos) else {
            return Err("unexpected end of expression".into());
        };
        if c.is_ascii_digit() || c == b'.' {
            while self.pos < self.s.len() && (self.s[self.pos].is_ascii_digit() || self.s[self.pos] == b'.') {
                self.pos += 1;
            }
            if self.pos < self.s.len() && matches!(self.s[self.pos], b'e' | b'E') {
                let save = self.pos;
                self.pos += 1;
                if self.pos < self.s.len() && matches!(self.s[self.pos], b'+' | b'-') {
                    self.pos += 1;
                }
                if self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                    while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                        self.pos += 1;
                    }
                } else {
                    self.pos = save;
                }
            }
            let lit = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii");
            return lit.parse().map_err(|_| format!("bad number '{lit}'"));
        }
        if c.is_ascii_alphabetic() {
            while self.pos < self.s.len() && self.s[self.pos].is_ascii_alphanumeric() {
                self.pos += 1;
            }
            let name = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii");
            if self.eat(b'(') {
                let arg = self.sum()?;
                if !self.eat(b')') {
                    return Err(format!("missing ')' after {name}("));
                }
                return match name {
                    "ln" => Ok(arg.ln()),
                    "exp" => Ok(arg.exp()),
                    "sqrt" => Ok(arg.sqrt()),
                    "sin" => Ok(arg.sin()),
                    "cos" => Ok(arg.cos()),
                    _ => Err(format!("unknown function '{name}'")),
                };
            }
            return match name {
                "pi" => Ok(std::f64::consts::PI),
                "e" => Ok(std::f64::consts::E),
                _ => Err(format!("unknown name '{name}'")),
            };
        }
        Err(format!("unexpected '{}' at {}", c as char, self.pos))
    }
}

#[cfg(test)]
mod tests {
    use super::eval;

    #[test]
    fn table_values() {
        assert_eq!(eval("ln(4)").unwrap(), 4f64.ln());
        assert_eq!(eval("ln(4) + 0.04").unwrap(), 4f64.ln() + 0.04);
        assert_eq!(eval("2000*2*pi/ln(4)").unwrap(), 2000.0 * 2.0 * std::f64::consts::PI / 4f64.ln());
        assert_eq!(eval("-2^2").unwrap(), -4.0);
        assert_eq!(eval("2^3^2").unwrap(), 512.0);
        assert_eq!(eval("1e-3").unwrap(), 1e-3);
        assert_eq!(eval(" -(1 - 3) * 2 / 4 ").unwrap(), 1.0);
        assert_eq!(eval("exp(1)").unwrap(), std::f64::consts::E);
        assert_eq!(eval("2e").unwrap_err(), "unexpected 'e' at 1");
    }

    #[test]
    fn errors() {
        for bad in ["", "1 +", "foo", "log(2)", "(1", "1/0", "3 4", "sqrt(-1)"] {
            assert!(eval(bad).is_err(), "{bad}");
        }
    }
}
