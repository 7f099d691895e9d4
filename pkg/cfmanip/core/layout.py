"""
Disposition des coordonnées généralisées d'une scène.

q empile, corps par corps, 7 coordonnées pour un corps libre (position,
quaternion wxyz) ou k coordonnées pour un corps linéaire ; v empile 6
composantes (vitesse linéaire, vitesse angulaire monde) ou k. Les corps non
actionnés viennent d'abord, les coordonnées robot ensuite : q = (q_o, q_r).
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidArgumentError

FREE = 'free'
LINEAR = 'linear'


@dataclass(frozen=True)
class BodyBlock:
    """Bloc de coordonnées d'un corps mobile"""
    name: str
    kind: str
    q_slice: slice
    v_slice: slice
    actuated: bool = False
    axes: np.ndarray = None
    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))

    @property
    def nq(self):
        return self.q_slice.stop - self.q_slice.start

    @property
    def nv(self):
        return self.v_slice.stop - self.v_slice.start

    def position(self, q):
        """Position monde du point de référence du corps"""
        if self.kind == FREE:
            return np.asarray(q[self.q_slice][:3], dtype=float)
        if self.axes is None:
            raise InvalidArgumentError(f"le corps {self.name} n'a pas de géométrie")
        return self.origin + self.axes @ q[self.q_slice]

    def orientation(self, q):
        if self.kind == FREE:
            return np.asarray(q[self.q_slice][3:7], dtype=float)
        return np.array([1.0, 0.0, 0.0, 0.0])


class SystemLayout:
    """Table des blocs de coordonnées, indexée par nom de corps"""

    def __init__(self, bodies, static=()):
        """
        Args:
            bodies: itérable de dicts {name, kind, actuated, axes, origin}
            static: noms des corps fixes (sans colonnes)
        """
        bodies = list(bodies)
        ordered = [b for b in bodies if not b.get('actuated')] + \
                  [b for b in bodies if b.get('actuated')]
        blocks = []
        iq = iv = 0
        for spec in ordered:
            kind = spec.get('kind', FREE)
            if kind == FREE:
                nq, nv, axes = 7, 6, None
            elif kind == LINEAR:
                axes = spec.get('axes')
                if axes is not None:
                    axes = np.asarray(axes, dtype=float).reshape(3, -1)
                    nq = nv = axes.shape[1]
                else:
                    nq = nv = int(spec['dof'])
            else:
                raise InvalidArgumentError(f"type de corps inconnu: {kind}")
            origin = np.asarray(spec.get('origin', np.zeros(3)), dtype=float)
            blocks.append(BodyBlock(spec['name'], kind, slice(iq, iq + nq), slice(iv, iv + nv),
                                    bool(spec.get('actuated')), axes, origin))
            iq += nq
            iv += nv
        names = [b.name for b in blocks]
        if len(set(names)) != len(names):
            raise InvalidArgumentError("noms de corps dupliqués dans la disposition")
        self.blocks = tuple(blocks)
        self.static = frozenset(static)
        self.nq = iq
        self.nv = iv
        self._index = {b.name: b for b in blocks}

        robot = [b for b in blocks if b.actuated]
        start_q = robot[0].q_slice.start if robot else iq
        start_v = robot[0].v_slice.start if robot else iv
        self.robot_q_slice = slice(start_q, iq)
        self.robot_v_slice = slice(start_v, iv)
        self.n_robot = iv - start_v

    @classmethod
    def single_object(cls, n_robot):
        """Un objet libre suivi de n_robot coordonnées robot additives"""
        bodies = [{'name': 'object', 'kind': FREE}]
        if n_robot:
            bodies.append({'name': 'robot', 'kind': LINEAR, 'actuated': True, 'dof': n_robot})
        return cls(bodies)

    def block(self, name):
        try:
            return self._index[name]
        except KeyError:
            raise InvalidArgumentError(f"corps inconnu: {name}") from None

    def is_static(self, name):
        return name in self.static

    def coordinate_names(self):
        """Noms de colonnes des coordonnées de q, dans l'ordre de q"""
        names = []
        for b in self.blocks:
            if b.kind == FREE:
                names += [f"{b.name}.{c}" for c in ('px', 'py', 'pz', 'qw', 'qx', 'qy', 'qz')]
            else:
                names += [f"{b.name}.q{i}" for i in range(b.nq)]
        return names

    def control_names(self):
        names = []
        for b in self.blocks:
            if b.actuated:
                names += [f"u.{b.name}.{i}" for i in range(b.nv)]
        return names
