import math

import numpy as np
import pytest

from voxscene.core import (
    IDENTITY,
    Material,
    MaterialPreset,
    Mesh,
    MeshPart,
    Scene,
    Transform,
    UnitQuat,
    Vec3,
    apply,
    compose,
    invert,
)

from helpers import matrix_apply, random_transform, random_vec3, transform_to_matrix


def vec_close(a: Vec3, b, tol=1e-9):
    b = np.asarray([b.x, b.y, b.z]) if isinstance(b, Vec3) else np.asarray(b)
    return np.allclose(a.to_array(), b, rtol=tol, atol=tol)


class TestCompose:
    def test_identity_neutral(self):
        t = Transform.translation(1.0, 2.0, 3.0)
        assert compose(IDENTITY, t) == t

    def test_translations_commute(self):
        a = Transform.translation(1, 0, 0)
        b = Transform.translation(0, 2, 0)
        assert vec_close(compose(a, b).position, Vec3(1, 2, 0))
        assert vec_close(compose(b, a).position, Vec3(1, 2, 0))

    def test_scale_then_translate_on_origin(self):
        # Hand-evaluated with the 4x4 product: S2 * T(1,0,0) maps 0 -> (2,0,0)
        s2 = Transform.scaling(2.0)
        t = Transform.translation(1, 0, 0)
        got = apply(compose(s2, t), Vec3(0, 0, 0))
        assert vec_close(got, Vec3(2, 0, 0))

    def test_matches_matrix_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            a, b = random_transform(rng), random_transform(rng)
            p = random_vec3(rng)
            want = matrix_apply(transform_to_matrix(a) @ transform_to_matrix(b), p)
            got = apply(compose(a, b), p)
            assert np.allclose(got.to_array(), want, rtol=1e-9, atol=1e-9)

    def test_associative(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            a, b, c = (random_transform(rng) for _ in range(3))
            p = random_vec3(rng)
            left = apply(compose(compose(a, b), c), p)
            right = apply(compose(a, compose(b, c)), p)
            assert np.allclose(left.to_array(), right.to_array(), rtol=1e-9, atol=1e-9)


class TestInvert:
    def test_identity(self):
        assert invert(IDENTITY) == IDENTITY

    def test_translation(self):
        inv = invert(Transform.translation(3, 0, 0))
        assert vec_close(inv.position, Vec3(-3, 0, 0))

    def test_rotation_90z(self):
        # Matrix-inverse oracle: Rz(90)^-1 maps (0,1,0) -> (1,0,0)
        r = Transform.rotation_about(Vec3(0, 0, 1), math.pi / 2)
        got = apply(invert(r), Vec3(0, 1, 0))
        assert vec_close(got, Vec3(1, 0, 0))

    def test_compose_with_inverse_is_identity(self):
        rng = np.random.default_rng(13)
        for _ in range(200):
            t = random_transform(rng)
            p = random_vec3(rng)
            got = apply(compose(t, invert(t)), p)
            assert np.allclose(got.to_array(), p.to_array(), rtol=1e-9, atol=1e-9)
            got2 = apply(compose(invert(t), t), p)
            assert np.allclose(got2.to_array(), p.to_array(), rtol=1e-9, atol=1e-9)


class TestApply:
    def test_identity(self):
        assert vec_close(apply(IDENTITY, Vec3(1, 2, 3)), Vec3(1, 2, 3))

    def test_pure_scale(self):
        assert vec_close(apply(Transform.scaling(2.0), Vec3(1, 0, 0)), Vec3(2, 0, 0))

    def test_rotate_translate(self):
        # Matrix oracle: T(0,0,1) * Rz(90) maps (1,0,0) -> (0,1,1)
        t = Transform(
            position=Vec3(0, 0, 1),
            rotation=UnitQuat.from_axis_angle(Vec3(0, 0, 1), math.pi / 2),
        )
        assert vec_close(apply(t, Vec3(1, 0, 0)), Vec3(0, 1, 1))

    def test_matches_matrix_oracle(self):
        rng = np.random.default_rng(17)
        for _ in range(300):
            t = random_transform(rng)
            p = random_vec3(rng)
            want = matrix_apply(transform_to_matrix(t), p)
            assert np.allclose(apply(t, p).to_array(), want, rtol=1e-9, atol=1e-9)


def test_quat_norm_stable_over_many_compositions():
    rng = np.random.default_rng(23)
    q = UnitQuat.identity()
    steps = [UnitQuat(*v).normalized() for v in rng.normal(size=(64, 4))]
    n = 1_000_000
    worst = 0.0
    for i in range(n):
        q = q.multiply(steps[i & 63])
        if i % 4096 == 0:
            worst = max(worst, abs(q.norm() - 1.0))
    worst = max(worst, abs(q.norm() - 1.0))
    assert worst < 1e-6


def test_vec3_rejects_non_finite():
    with pytest.raises(ValueError):
        Vec3(float("nan"), 0, 0)
    with pytest.raises(ValueError):
        Vec3(0, float("inf"), 0)


def test_transform_rejects_non_positive_scale():
    with pytest.raises(ValueError):
        Transform(scale=0.0)
    with pytest.raises(ValueError):
        Transform(scale=-1.0)


class TestMaterial:
    def test_opacity_clamped(self):
        assert Material(opacity=1.3).opacity == 1.0
        assert Material(opacity=-0.2).opacity == 0.0

    def test_glass_forces_translucency(self):
        m = Material(preset=MaterialPreset.GLASS, opacity=1.0)
        assert m.opacity < 1.0


class TestMesh:
    def test_triangle_index_bounds_checked(self):
        with pytest.raises(ValueError):
            Mesh(np.zeros((3, 3)), np.array([[0, 1, 3]]))

    def test_parts_must_cover(self):
        verts = np.zeros((3, 3))
        tris = np.array([[0, 1, 2], [2, 1, 0]])
        with pytest.raises(ValueError):
            Mesh(verts, tris, parts=[MeshPart("a", 0, 1)])
        with pytest.raises(ValueError):
            Mesh(verts, tris, parts=[MeshPart("a", 0, 1), MeshPart("b", 0, 2)])

    def test_part_mesh_compacts_vertices(self):
        verts = np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0], [5, 5, 5]])
        tris = np.array([[0, 1, 2], [1, 2, 3]])
        m = Mesh(verts, tris, parts=[MeshPart("a", 0, 1), MeshPart("b", 1, 2)])
        sub = m.part_mesh(1)
        assert sub.vertex_count == 3
        assert sub.triangle_count == 1
        assert np.allclose(sub.vertices[sub.triangles[0]], verts[[1, 2, 3]])


class TestScene:
    def test_revision_counts_mutations(self):
        s = Scene()
        mid = s.add_mesh(Mesh(np.zeros((3, 3)), np.array([[0, 1, 2]])))
        assert s.revision == 0  # mesh registration is not a scene mutation
        obj = s.add_object("a", IDENTITY, mid)
        assert s.revision == 1
        s.set_transform(obj.id, Transform.translation(1, 0, 0))
        s.set_material(obj.id, Material())
        s.set_grab_owner(obj.id, 7)
        assert s.revision == 4

    def test_ids_unique_and_monotonic(self):
        s = Scene()
        mid = s.add_mesh(Mesh(np.zeros((3, 3)), np.array([[0, 1, 2]])))
        a = s.add_object("a", IDENTITY, mid)
        b = s.add_object("b", IDENTITY, mid)
        assert b.id > a.id

    def test_unknown_object(self):
        from voxscene.core import UnknownObject

        s = Scene()
        with pytest.raises(UnknownObject):
            s.get(42)
