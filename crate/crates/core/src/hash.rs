use md5::{Digest as _, Md5};

/// A 16-byte MD5 digest.
pub type Digest = [u8; 16];

pub fn md5(bytes: &[u8]) -> Digest {
    Md5::digest(bytes).into()
}

/// MD5 over the concatenation of several byte slices.
pub fn md5_concat(parts: &[&[u8]]) -> Digest {
    let mut hasher = Md5::new();
    for part in parts {
        hasher.update(part);
    }
    hasher.finalize().into()
}

pub fn to_hex(digest: &Digest) -> String {
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
