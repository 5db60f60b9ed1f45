//! Arbitrary-precision Maclaurin summation of Ai and Ai', used as the
//! reference for the double-precision evaluator.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive, Zero};

const FRAC_BITS: u64 = 640;

const AI0_DIGITS: &str = "355028053887817239260063186004183176397979174199177240583326510300810042450126712957174246054040271688420448730349495839758292670446162";
const NEG_AIP0_DIGITS: &str = "258819403792806798405183560189203963479091138354934582210001813856102772676790280654196405827275384313371193211789133381275035952167626";

#[derive(Clone)]
struct Fixed {
    re: BigInt,
    im: BigInt,
}

impl Fixed {
    fn zero() -> Self {
        Fixed { re: BigInt::zero(), im: BigInt::zero() }
    }

    fn one() -> Self {
        Fixed { re: BigInt::one() << FRAC_BITS, im: BigInt::zero() }
    }

    fn from_f64(z: Complex64) -> Self {
        Fixed { re: real_from_f64(z.re), im: real_from_f64(z.im) }
    }

    fn add(&self, o: &Fixed) -> Fixed {
        Fixed { re: &self.re + &o.re, im: &self.im + &o.im }
    }

    fn sub(&self, o: &Fixed) -> Fixed {
        Fixed { re: &self.re - &o.re, im: &self.im - &o.im }
    }

    fn mul(&self, o: &Fixed) -> Fixed {
        let re = (&self.re * &o.re - &self.im * &o.im) >> FRAC_BITS;
        let im = (&self.re * &o.im + &self.im * &o.re) >> FRAC_BITS;
        Fixed { re, im }
    }

    fn mul_real(&self, r: &BigInt) -> Fixed {
        Fixed { re: (&self.re * r) >> FRAC_BITS, im: (&self.im * r) >> FRAC_BITS }
    }

    fn div_int(&self, d: u64) -> Fixed {
        let d = BigInt::from(d);
        Fixed { re: &self.re / &d, im: &self.im / &d }
    }

    fn magnitude_bits(&self) -> u64 {
        self.re.abs().bits().max(self.im.abs().bits())
    }

    fn to_complex(&self) -> Complex64 {
        Complex64::new(real_to_f64(&self.re), real_to_f64(&self.im))
    }
}

fn real_from_f64(x: f64) -> BigInt {
    if x == 0.0 {
        return BigInt::zero();
    }
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { -1 } else { 1 };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 { (frac, -1074) } else { (frac | (1u64 << 52), exp - 1075) };
    let m = BigInt::from(mant) * sign;
    let shift = FRAC_BITS as i64 + e;
    if shift >= 0 {
        m << shift as u64
    } else {
        m >> (-shift) as u64
    }
}

fn real_to_f64(x: &BigInt) -> f64 {
    // Keep 64 leading bits so the conversion is correctly rounded to f64 precision.
    let bits = x.abs().bits() as i64;
    let drop = (bits - 64).max(0);
    let top = (x >> drop as u64).to_f64().unwrap();
    top * 2f64.powi((drop - FRAC_BITS as i64) as i32)
}

fn constant(digits: &str) -> BigInt {
    let n: BigInt = digits.parse().unwrap();
    let ten = BigInt::from(10u32).pow(digits.len() as u32);
    (n << FRAC_BITS) / ten
}

/// Ai(z) and Ai'(z) to roughly 30 significant digits for |z| <= 30.
pub fn airy_reference(z: Complex64) -> (Complex64, Complex64) {
    let c1 = constant(AI0_DIGITS);
    let c2 = constant(NEG_AIP0_DIGITS);
    let zf = Fixed::from_f64(z);
    let z3 = zf.mul(&zf).mul(&zf);

    let mut f = Fixed::one();
    let mut g = zf.clone();
    let mut fp = Fixed::zero();
    let mut gp = Fixed::one();
    let (mut sf, mut sg, mut sfp, mut sgp) = (f.clone(), g.clone(), fp.clone(), gp.clone());
    let tiny = 8u64;
    for k in 0u64..2000 {
        f = f.mul(&z3).div_int((3 * k + 2) * (3 * k + 3));
        g = g.mul(&z3).div_int((3 * k + 3) * (3 * k + 4));
        fp = if k == 0 {
            zf.mul(&zf).div_int(2)
        } else {
            fp.mul(&z3).div_int(3 * k * (3 * k + 2))
        };
        gp = gp.mul(&z3).div_int((3 * k + 1) * (3 * k + 3));
        sf = sf.add(&f);
        sg = sg.add(&g);
        sfp = sfp.add(&fp);
        sgp = sgp.add(&gp);
        let largest = f.magnitude_bits().max(g.magnitude_bits()).max(fp.magnitude_bits()).max(gp.magnitude_bits());
        if k > 4 && largest <= tiny {
            break;
        }
    }
    let ai = sf.mul_real(&c1).sub(&sg.mul_real(&c2));
    let aip = sfp.mul_real(&c1).sub(&sgp.mul_real(&c2));
    (ai.to_complex(), aip.to_complex())
}
