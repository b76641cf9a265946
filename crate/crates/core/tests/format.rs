use mclift::{
    compensator, forward, generate_phantom, inverse, load_decomposition, load_volume, save_decomposition,
    save_volume, CompensationParams, Decomposition, Error, Method, PhantomKind, PhantomSpec, Volume,
};

fn phantom() -> Volume {
    generate_phantom(
        &PhantomSpec::new(PhantomKind::GlobalTranslation { dy: 1, dx: -2 }).with_noise(2).with_seed(3),
        5,
        24,
        16,
        12,
    )
    .unwrap()
}

#[test]
fn header_layout() {
    let v = phantom();
    let c = compensator(Method::Mesh, &CompensationParams::default()).unwrap();
    let bytes = forward(&v, c.as_ref()).unwrap().encode();
    assert_eq!(&bytes[..4], b"MCWD");
    assert_eq!(bytes[4], 1);
    assert_eq!(bytes[5], 3);
    assert_eq!(bytes[6], 12);
    assert_eq!(bytes[7], 0);
    assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 5);
    assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 24);
    assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 16);
}

#[test]
fn zero_method_has_no_motion_section() {
    let v = phantom();
    let bytes = forward(&v, &mclift::ZeroCompensator).unwrap().encode();
    assert_eq!(bytes.len(), 20 + 5 * 24 * 16 * 4);
}

#[test]
fn block_records_follow_coefficients() {
    let v = phantom();
    let c = compensator(Method::Block, &CompensationParams::default()).unwrap();
    let dec = forward(&v, c.as_ref()).unwrap();
    assert_eq!(dec.motion().len(), 2);
    let bytes = dec.encode();
    let mut at = 20 + 5 * 24 * 16 * 4;
    // 3x2 grid of 8x8 blocks: 8-byte header + 6 vectors of 2 bytes
    for _ in 0..4 {
        let len = u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as usize;
        assert_eq!(len, 8 + 12);
        assert_eq!(u16::from_le_bytes(bytes[at + 4..at + 6].try_into().unwrap()), 8);
        at += 4 + len;
    }
    assert_eq!(at, bytes.len());
}

#[test]
fn files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let v = phantom();
    save_volume(&v, dir.path().join("v.mcwv")).unwrap();
    assert_eq!(load_volume(dir.path().join("v.mcwv")).unwrap(), v);
    for method in Method::ALL {
        let c = compensator(method, &CompensationParams::default()).unwrap();
        let dec = forward(&v, c.as_ref()).unwrap();
        let path = dir.path().join(format!("{}.mcwd", method.code()));
        save_decomposition(&dec, &path).unwrap();
        let back = load_decomposition(&path).unwrap();
        assert_eq!(back, dec);
        assert_eq!(inverse(&back, c.as_ref()).unwrap(), v);
    }
}

#[test]
fn damaged_headers_are_format_errors() {
    let v = phantom();
    let c = compensator(Method::Block, &CompensationParams::default()).unwrap();
    let good = forward(&v, c.as_ref()).unwrap().encode();
    let damage = |at: usize, value: u8| {
        let mut b = good.clone();
        b[at] = value;
        Decomposition::decode(&b).unwrap_err()
    };
    for (at, value) in [(0, b'X'), (4, 9), (5, 7), (6, 3), (7, 5), (8, 1)] {
        let e = damage(at, value);
        assert!(e.is_format(), "byte {at}: {e}");
    }
    assert!(matches!(Decomposition::decode(&good[..good.len() - 1]), Err(Error::Format { .. })));
    let mut longer = good.clone();
    longer.push(0);
    assert!(Decomposition::decode(&longer).unwrap_err().is_format());
}

#[test]
fn out_of_range_vector_is_rejected() {
    let v = phantom();
    let c = compensator(Method::Block, &CompensationParams::default()).unwrap();
    let mut bytes = forward(&v, c.as_ref()).unwrap().encode();
    // first vector dy of the first record -> beyond the stored search range
    let at = 20 + 5 * 24 * 16 * 4 + 4 + 8;
    bytes[at] = 100;
    assert!(Decomposition::decode(&bytes).unwrap_err().is_format());
}

#[test]
fn wrong_compensator_is_a_method_mismatch() {
    let v = phantom();
    let block = compensator(Method::Block, &CompensationParams::default()).unwrap();
    let mesh = compensator(Method::Mesh, &CompensationParams::default()).unwrap();
    let dec = forward(&v, block.as_ref()).unwrap();
    assert!(matches!(inverse(&dec, mesh.as_ref()), Err(Error::MethodMismatch { .. })));
}
