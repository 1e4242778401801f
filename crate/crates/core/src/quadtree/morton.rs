use serde::{Deserialize, Serialize};

/// Z-order index of a cell; `y` takes the more significant bit of each pair,
/// so the four quadrants of any level sort NW, NE, SW, SE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MortonCode(pub u64);

#[inline]
fn spread(v: u32) -> u64 {
    let mut z = v as u64;
    z = (z | (z << 16)) & 0x0000_FFFF_0000_FFFF;
    z = (z | (z << 8)) & 0x00FF_00FF_00FF_00FF;
    z = (z | (z << 4)) & 0x0F0F_0F0F_0F0F_0F0F;
    z = (z | (z << 2)) & 0x3333_3333_3333_3333;
    z = (z | (z << 1)) & 0x5555_5555_5555_5555;
    z
}

#[inline]
fn compact(z: u64) -> u32 {
    let mut z = z & 0x5555_5555_5555_5555;
    z = (z | (z >> 1)) & 0x3333_3333_3333_3333;
    z = (z | (z >> 2)) & 0x0F0F_0F0F_0F0F_0F0F;
    z = (z | (z >> 4)) & 0x00FF_00FF_00FF_00FF;
    z = (z | (z >> 8)) & 0x0000_FFFF_0000_FFFF;
    z = (z | (z >> 16)) & 0x0000_0000_FFFF_FFFF;
    z as u32
}

#[inline]
pub fn morton_encode(cx: u32, cy: u32) -> MortonCode {
    MortonCode(spread(cx) | (spread(cy) << 1))
}

#[inline]
pub fn morton_decode(code: MortonCode) -> (u32, u32) {
    (compact(code.0), compact(code.0 >> 1))
}
