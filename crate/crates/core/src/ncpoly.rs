//! Words over {1..d}, noncommutative homogeneous polynomials, a text parser,
//! and graded components of two-sided homogeneous ideals.
//!
//! Basis convention, fixed repo-wide: the word alpha of length n maps to the
//! index sum (alpha_j - 1) d^(n-j), i.e. lexicographic order with letter 1
//! smallest and the first letter most significant. This matches the kron
//! convention, so e_alpha (x) e_beta = e_{alpha beta}.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use ndarray_linalg::c64;

use crate::error::{Error, Result};
use crate::kernel::{orthonormalize, Subspace};

/// A monomial: a sequence of letters in [1..d].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word {
    letters: Vec<u8>,
}

impl Word {
    pub fn new(letters: Vec<u8>, d: usize) -> Result<Self> {
        for &l in &letters {
            if l == 0 || l as usize > d {
                return Err(Error::VarOutOfRange {
                    idx: l as usize,
                    d,
                });
            }
        }
        Ok(Word { letters })
    }

    pub fn empty() -> Self {
        Word { letters: vec![] }
    }

    pub fn letters(&self) -> &[u8] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        Word { letters }
    }

    /// Index of e_alpha in the lexicographic basis of C^{d^n}.
    pub fn index(&self, d: usize) -> usize {
        let mut idx = 0usize;
        for &l in &self.letters {
            idx = idx * d + (l as usize - 1);
        }
        idx
    }

    /// Inverse of `index` for words of length n.
    pub fn from_index(mut idx: usize, n: usize, d: usize) -> Word {
        let mut letters = vec![0u8; n];
        for j in (0..n).rev() {
            letters[j] = (idx % d) as u8 + 1;
            idx /= d;
        }
        Word { letters }
    }
}

impl std::fmt::Display for Word {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self.letters.iter().map(|l| format!("x{}", l)).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Complex-coefficient polynomial in noncommuting variables x1..xd.
/// Zero coefficients are never stored.
#[derive(Debug, Clone)]
pub struct NcPolynomial {
    d: usize,
    terms: BTreeMap<Word, c64>,
}

impl NcPolynomial {
    pub fn zero(d: usize) -> Self {
        NcPolynomial {
            d,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_terms(d: usize, terms: impl IntoIterator<Item = (Word, c64)>) -> Result<Self> {
        let mut p = NcPolynomial::zero(d);
        for (w, c) in terms {
            Word::new(w.letters.clone(), d)?;
            p.add_term(w, c);
        }
        Ok(p)
    }

    pub fn monomial(d: usize, letters: &[u8], coeff: c64) -> Result<Self> {
        let w = Word::new(letters.to_vec(), d)?;
        let mut p = NcPolynomial::zero(d);
        p.add_term(w, coeff);
        Ok(p)
    }

    fn add_term(&mut self, w: Word, c: c64) {
        use std::collections::btree_map::Entry;
        let zero = c64::new(0.0, 0.0);
        match self.terms.entry(w) {
            Entry::Vacant(e) => {
                if c != zero {
                    e.insert(c);
                }
            }
            Entry::Occupied(mut e) => {
                let v = *e.get() + c;
                if v == zero {
                    e.remove();
                } else {
                    e.insert(v);
                }
            }
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &c64)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Degree of a homogeneous polynomial, or None if the terms have mixed
    /// lengths. The zero polynomial is homogeneous of every degree; we report
    /// Some(0) for it.
    pub fn homogeneous_degree(&self) -> Option<usize> {
        let mut it = self.terms.keys();
        let first = match it.next() {
            None => return Some(0),
            Some(w) => w.len(),
        };
        if it.all(|w| w.len() == first) {
            Some(first)
        } else {
            None
        }
    }

    pub fn is_homogeneous(&self) -> bool {
        self.homogeneous_degree().is_some()
    }

    /// Coefficient norm ||p(e)||.
    pub fn coeff_norm(&self) -> f64 {
        self.terms
            .values()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Coefficient embedding p |-> p(e) in C^{d^n} for p homogeneous of
    /// degree n.
    pub fn embed_coeff(&self, n: usize) -> Result<Array1<c64>> {
        let deg = self.homogeneous_degree().ok_or(Error::NotHomogeneous)?;
        if !self.is_zero() && deg != n {
            return Err(Error::DegreeMismatch {
                expected: n,
                got: deg,
            });
        }
        let mut v = Array1::zeros(self.d.pow(n as u32));
        for (w, c) in &self.terms {
            v[w.index(self.d)] = *c;
        }
        Ok(v)
    }

    /// x^alpha * p * x^beta.
    pub fn shifted(&self, alpha: &Word, beta: &Word) -> NcPolynomial {
        let mut out = NcPolynomial::zero(self.d);
        for (w, c) in &self.terms {
            out.add_term(alpha.concat(w).concat(beta), *c);
        }
        out
    }

    pub fn scaled(&self, by: c64) -> NcPolynomial {
        let mut out = NcPolynomial::zero(self.d);
        for (w, c) in &self.terms {
            out.add_term(w.clone(), *c * by);
        }
        out
    }

    pub fn add(&self, other: &NcPolynomial) -> NcPolynomial {
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), *c);
        }
        out
    }

    /// Render in the same grammar `parse` accepts.
    pub fn render(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (w, c)) in self.terms.iter().enumerate() {
            let (sign, c) = if c.im == 0.0 && c.re < 0.0 {
                ("-", -c)
            } else {
                ("+", *c)
            };
            if i == 0 {
                if sign == "-" {
                    out.push_str("- ");
                }
            } else {
                out.push_str(if sign == "-" { " - " } else { " + " });
            }
            let coeff_str = if c.im == 0.0 {
                if c.re == 1.0 && !w.is_empty() {
                    String::new()
                } else {
                    format!("{}", c.re)
                }
            } else {
                format!("({}+{}i)", c.re, c.im)
            };
            match (coeff_str.is_empty(), w.is_empty()) {
                (true, _) => out.push_str(&w.to_string()),
                (false, true) => out.push_str(&coeff_str),
                (false, false) => {
                    out.push_str(&coeff_str);
                    out.push(' ');
                    out.push_str(&w.to_string());
                }
            }
        }
        out
    }
}

/// Parse a polynomial. Grammar: terms joined by + / -; a term is an optional
/// coefficient (real literal or "(a+bi)") followed by a monomial of
/// whitespace-separated variables "x3 x1"; "1" denotes the empty monomial.
pub fn parse_poly(text: &str, d: usize) -> Result<NcPolynomial> {
    Parser::new(text, d).parse()
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    d: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, d: usize) -> Self {
        Parser {
            src: text.as_bytes(),
            pos: 0,
            d,
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn parse(&mut self) -> Result<NcPolynomial> {
        let mut poly = NcPolynomial::zero(self.d);
        self.skip_ws();
        if self.peek().is_none() {
            return Err(self.err("empty input"));
        }
        let mut sign = 1.0;
        if let Some(c) = self.peek() {
            if c == b'+' || c == b'-' {
                sign = if c == b'-' { -1.0 } else { 1.0 };
                self.pos += 1;
            }
        }
        loop {
            let (word, coeff) = self.parse_term()?;
            poly.add_term(word, coeff * sign);
            self.skip_ws();
            match self.peek() {
                None => break,
                Some(b'+') => {
                    sign = 1.0;
                    self.pos += 1;
                }
                Some(b'-') => {
                    sign = -1.0;
                    self.pos += 1;
                }
                Some(c) => {
                    return Err(self.err(format!("expected '+' or '-', found '{}'", c as char)))
                }
            }
        }
        Ok(poly)
    }

    fn parse_term(&mut self) -> Result<(Word, c64)> {
        self.skip_ws();
        let mut coeff = c64::new(1.0, 0.0);
        let mut have_coeff = false;
        match self.peek() {
            Some(b'(') => {
                coeff = self.parse_complex()?;
                have_coeff = true;
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                // "1" alone is the empty monomial; a number followed by
                // variables is a real coefficient.
                coeff = c64::new(self.parse_number()?, 0.0);
                have_coeff = true;
            }
            _ => {}
        }
        let word = self.parse_monomial()?;
        if word.is_empty() && !have_coeff {
            return Err(self.err("expected a coefficient or a monomial"));
        }
        Ok((word, coeff))
    }

    fn parse_number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        if self.peek() == Some(b'+') || self.peek() == Some(b'-') {
            self.pos += 1;
        }
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' {
                self.pos += 1;
                // allow exponent sign
                if (c == b'e' || c == b'E')
                    && matches!(self.peek(), Some(b'+') | Some(b'-'))
                {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        s.parse::<f64>()
            .map_err(|_| self.err(format!("bad number literal '{}'", s)))
    }

    fn parse_complex(&mut self) -> Result<c64> {
        // "(a+bi)" or "(a-bi)"
        if self.peek() != Some(b'(') {
            return Err(self.err("expected '('"));
        }
        self.pos += 1;
        let re = self.parse_number()?;
        self.skip_ws();
        let sign = match self.peek() {
            Some(b'+') => 1.0,
            Some(b'-') => -1.0,
            _ => return Err(self.err("expected '+' or '-' in complex literal")),
        };
        self.pos += 1;
        let im = self.parse_number()? * sign;
        self.skip_ws();
        if self.peek() != Some(b'i') {
            return Err(self.err("expected 'i' in complex literal"));
        }
        self.pos += 1;
        self.skip_ws();
        if self.peek() != Some(b')') {
            return Err(self.err("expected ')'"));
        }
        self.pos += 1;
        Ok(c64::new(re, im))
    }

    fn parse_monomial(&mut self) -> Result<Word> {
        let mut letters = Vec::new();
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'x') => {
                    self.pos += 1;
                    let start = self.pos;
                    while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                        self.pos += 1;
                    }
                    if start == self.pos {
                        return Err(self.err("expected variable index after 'x'"));
                    }
                    let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                    let idx: usize = s
                        .parse()
                        .map_err(|_| self.err(format!("bad variable index '{}'", s)))?;
                    if idx == 0 || idx > self.d {
                        return Err(Error::VarOutOfRange { idx, d: self.d });
                    }
                    letters.push(idx as u8);
                }
                _ => break,
            }
        }
        Ok(Word { letters })
    }
}

/// A two-sided ideal generated by nonzero homogeneous polynomials of
/// degree >= 1; proper by construction.
#[derive(Debug, Clone)]
pub struct HomogeneousIdeal {
    d: usize,
    generators: Vec<NcPolynomial>,
}

impl HomogeneousIdeal {
    pub fn new(d: usize, generators: Vec<NcPolynomial>) -> Result<Self> {
        for g in &generators {
            match g.homogeneous_degree() {
                Some(k) if k >= 1 && !g.is_zero() => {}
                _ => return Err(Error::BadGenerator),
            }
            if g.d() != d {
                return Err(Error::Invalid(format!(
                    "generator alphabet size {} != ideal alphabet size {}",
                    g.d(),
                    d
                )));
            }
        }
        Ok(HomogeneousIdeal { d, generators })
    }

    pub fn parse(d: usize, texts: &[&str]) -> Result<Self> {
        let gens = texts
            .iter()
            .map(|t| parse_poly(t, d))
            .collect::<Result<Vec<_>>>()?;
        HomogeneousIdeal::new(d, gens)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn generators(&self) -> &[NcPolynomial] {
        &self.generators
    }

    /// The degree-n component I^(n): the span of x^alpha g x^beta over all
    /// generators g and words alpha, beta with |alpha| + |beta| = n - deg g.
    pub fn graded_component(&self, n: usize, tol: f64) -> Result<Subspace> {
        assert!(n >= 1, "graded components are defined for n >= 1");
        let dim = self.d.pow(n as u32);
        let mut columns: Vec<Array1<c64>> = Vec::new();
        for g in &self.generators {
            let k = g.homogeneous_degree().unwrap();
            if k > n {
                continue;
            }
            let m = n - k;
            for a in 0..=m {
                let b = m - a;
                for ai in 0..self.d.pow(a as u32) {
                    let alpha = Word::from_index(ai, a, self.d);
                    for bi in 0..self.d.pow(b as u32) {
                        let beta = Word::from_index(bi, b, self.d);
                        let shifted = g.shifted(&alpha, &beta);
                        columns.push(shifted.embed_coeff(n)?);
                    }
                }
            }
        }
        if columns.is_empty() {
            return Ok(Subspace::zero(dim, tol));
        }
        let mut mat = Array2::zeros((dim, columns.len()));
        for (c, v) in columns.iter().enumerate() {
            mat.column_mut(c).assign(v);
        }
        orthonormalize(&mat, tol)
    }

    /// Distance of p(e) to the degree-(deg p) component.
    pub fn membership_residual(&self, p: &NcPolynomial) -> Result<f64> {
        let n = p.homogeneous_degree().ok_or(Error::NotHomogeneous)?;
        if p.is_zero() {
            return Ok(0.0);
        }
        let v = p.embed_coeff(n)?;
        let comp = self.graded_component(n, crate::kernel::RANK_TOL)?;
        Ok(comp.distance(&v))
    }

    /// Ideal membership for homogeneous p, decided in the graded component.
    /// The zero polynomial is a member by convention.
    pub fn contains(&self, p: &NcPolynomial, tol: f64) -> Result<bool> {
        if p.is_zero() {
            return Ok(true);
        }
        let r = self.membership_residual(p)?;
        Ok(r <= tol * p.coeff_norm())
    }
}
