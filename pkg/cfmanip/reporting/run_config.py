"""
Configuration d'exécution : fichier `clé = valeur` (clés pointées, commentaires
`#`) surchargé par les options de ligne de commande, validé par un schéma
marshmallow dont les valeurs par défaut viennent du profil Config actif.
"""

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

from marshmallow import RAISE, Schema, ValidationError, fields, validate

from ..config import get_config
from ..control.costs import CostConfig
from ..control.mpc import MpcConfig
from ..errors import ConfigError
from ..scenarios.runner import STEPPERS
from ..scenarios.scenes import FINGERTIP_OBJECTS, SCENES
from ..scenarios.tasks import TASK_KINDS, task_weights

logger = logging.getLogger(__name__)

COMMANDS = ('simulate', 'mpc', 'bench', 'validate')

# Scène par défaut de chaque commande
COMMAND_SCENES = {'simulate': 'sliding_cube', 'mpc': 'fingertips_box', 'bench': 'push_boxes',
                  'validate': 'sliding_cube'}

_TYPE_NAMES = {
    fields.Integer: 'entier',
    fields.Float: 'réel',
    fields.String: 'chaîne',
    fields.Boolean: 'booléen',
}


class SeedsField(fields.Field):
    """Graines : entier, plage `a-b` (incluse) ou liste `a,b,c`"""

    default_error_messages = {'invalid': "graines invalides (attendu: entier, plage a-b ou liste a,b,c)"}

    def _deserialize(self, value, attr, data, **kwargs):
        if isinstance(value, int):
            return [value]
        if isinstance(value, (list, tuple)):
            return [int(v) for v in value]
        seeds = []
        try:
            for part in str(value).split(','):
                part = part.strip()
                if not part:
                    continue
                head, sep, tail = part.partition('-')
                if sep and head:
                    low, high = int(head), int(tail)
                    if high < low:
                        raise ValueError(part)
                    seeds.extend(range(low, high + 1))
                else:
                    seeds.append(int(part))
        except ValueError as e:
            raise self.make_error('invalid') from e
        if not seeds:
            raise ValidationError("liste de graines vide")
        return seeds


class CsvListField(fields.Field):
    """Liste séparée par des virgules"""

    def _deserialize(self, value, attr, data, **kwargs):
        if isinstance(value, (list, tuple)):
            return [str(v) for v in value]
        return [v.strip() for v in str(value).split(',') if v.strip()]


def _even(value):
    # la base tangente est symétrique : n_d/2 directions et leurs opposées
    if value % 2:
        raise ValidationError(f"nombre pair attendu, reçu {value}")


def _schema_for(cfg):
    """Schéma de RunConfig dont les défauts suivent le profil cfg"""
    positive = validate.Range(min=0, min_inclusive=False)
    return Schema.from_dict({
        'scene': fields.String(data_key='scene.name', load_default='sliding_cube',
                               validate=validate.OneOf(sorted(SCENES))),
        'n_cube': fields.Integer(data_key='scene.n_cube', load_default=10, validate=validate.Range(min=1)),
        'mu': fields.Float(data_key='scene.mu', load_default=None, allow_none=True,
                           validate=validate.Range(min=0)),
        'scene_seed': fields.Integer(data_key='scene.seed', load_default=0),
        'object': fields.String(data_key='scene.object', load_default='cube',
                                validate=validate.OneOf(sorted(FINGERTIP_OBJECTS))),
        'drive': fields.Float(data_key='scene.drive', load_default=None, allow_none=True),
        'stepper': fields.String(data_key='stepper', load_default='cf', validate=validate.OneOf(STEPPERS)),
        'steps': fields.Integer(data_key='steps', load_default=500, validate=validate.Range(min=0)),
        'seeds': SeedsField(data_key='seeds', load_default=lambda: [0]),
        'out': fields.String(data_key='out', load_default=cfg.OUTPUT_DIR),
        'workers': fields.Integer(data_key='run.workers', load_default=cfg.WORKERS,
                                  validate=validate.Range(min=1)),
        'stiffness': fields.Float(data_key='model.stiffness', load_default=None, allow_none=True,
                                  validate=positive),
        'damping': fields.Float(data_key='model.damping', load_default=None, allow_none=True,
                                validate=validate.Range(min=0)),
        'gamma': fields.Float(data_key='model.gamma', load_default=cfg.SOFTPLUS_GAMMA, validate=positive),
        'n_d': fields.Integer(data_key='geometry.n_d', load_default=cfg.N_D,
                              validate=[validate.Range(min=2), _even]),
        'contact_margin': fields.Float(data_key='geometry.contact_margin', load_default=cfg.CONTACT_MARGIN,
                                       validate=positive),
        'max_contacts_per_pair': fields.Integer(data_key='geometry.max_contacts_per_pair',
                                                load_default=cfg.MAX_CONTACTS_PER_PAIR,
                                                validate=validate.Range(min=1)),
        'horizon': fields.Integer(data_key='mpc.horizon', load_default=cfg.MPC_HORIZON,
                                  validate=validate.Range(min=0)),
        'u_bound': fields.Float(data_key='mpc.u_bound', load_default=cfg.MPC_U_BOUND, validate=positive),
        'max_iter': fields.Integer(data_key='mpc.max_iter', load_default=cfg.MPC_MAX_ITER,
                                   validate=validate.Range(min=1)),
        'tolerance': fields.Float(data_key='mpc.tolerance', load_default=cfg.MPC_TOLERANCE, validate=positive),
        'rollout_cap': fields.Integer(data_key='mpc.rollout_cap', load_default=cfg.MPC_ROLLOUT_CAP,
                                      validate=validate.Range(min=1)),
        'success_window': fields.Integer(data_key='mpc.success_window', load_default=cfg.MPC_SUCCESS_WINDOW,
                                         validate=validate.Range(min=1)),
        'task': fields.String(data_key='task.kind', load_default='rotation', validate=validate.OneOf(TASK_KINDS)),
        'w_contact': fields.Float(data_key='cost.w_contact', load_default=cfg.W_CONTACT),
        'w_grasp': fields.Float(data_key='cost.w_grasp', load_default=cfg.W_GRASP),
        'w_control': fields.Float(data_key='cost.w_control', load_default=None, allow_none=True),
        'w_position': fields.Float(data_key='cost.w_position', load_default=cfg.W_POSITION),
        'w_orientation': fields.Float(data_key='cost.w_orientation', load_default=cfg.W_ORIENTATION),
        'repetitions': fields.Integer(data_key='bench.repetitions', load_default=cfg.BENCH_REPETITIONS,
                                      validate=validate.Range(min=2)),
        'bench_steppers': CsvListField(data_key='bench.steppers', load_default=lambda: ['cf', 'qp'],
                                       validate=validate.ContainsOnly(STEPPERS)),
    }, name='RunConfigSchema')


@dataclass
class RunConfig:
    """Configuration entièrement résolue d'une commande"""
    command: str
    scene: str
    n_cube: int
    mu: float
    scene_seed: int
    object: str
    drive: float
    stepper: str
    steps: int
    seeds: list
    out: str
    workers: int
    stiffness: float
    damping: float
    gamma: float
    n_d: int
    contact_margin: float
    max_contacts_per_pair: int
    horizon: int
    u_bound: float
    max_iter: int
    tolerance: float
    rollout_cap: int
    success_window: int
    task: str
    w_contact: float
    w_grasp: float
    w_control: float
    w_position: float
    w_orientation: float
    repetitions: int
    bench_steppers: list
    quick: bool = False
    profile: object = None
    sources: dict = field(default_factory=dict)

    def scene_params(self):
        """Paramètres transmis à build_scene (seuls ceux qui ont un sens pour la scène)"""
        params = {'n_d': self.n_d, 'contact_margin': self.contact_margin,
                  'max_contacts_per_pair': self.max_contacts_per_pair, 'gamma': self.gamma}
        for name in ('mu', 'stiffness', 'damping', 'drive'):
            if getattr(self, name) is not None:
                params[name] = getattr(self, name)
        if self.scene == 'push_boxes':
            params['n_cube'] = self.n_cube
        if self.scene == 'fingertips_box':
            params['object'] = self.object
        return params

    def mpc_config(self):
        return MpcConfig(horizon=self.horizon, u_lb=-self.u_bound, u_ub=self.u_bound,
                         max_iter=self.max_iter, tolerance=self.tolerance,
                         rollout_cap=self.rollout_cap, success_window=self.success_window)

    def cost_config(self):
        """Poids de coût ; w_control suit le type de tâche sauf surcharge explicite"""
        w_control = self.w_control
        if w_control is None:
            w_control = task_weights(self.task).get('w_control', (self.profile or get_config()).W_CONTROL)
        return CostConfig(self.w_contact, self.w_grasp, w_control, self.w_position, self.w_orientation)

    def output_dir(self):
        """Crée le répertoire de sortie si besoin"""
        path = Path(self.out)
        try:
            path.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ConfigError(f"répertoire de sortie non accessible: {path} ({e})", key='out') from e
        if not os.access(path, os.W_OK):
            raise ConfigError(f"répertoire de sortie non inscriptible: {path}", key='out')
        return path


# ==================== LECTURE ====================

def read_config_file(path):
    """
    Lit un fichier `clé = valeur` (UTF-8, une clé par ligne, `#` pour les commentaires).

    Raises:
        ConfigError: ligne sans `=` ou clé vide
        OSError: fichier illisible
    """
    values = {}
    with open(path, encoding='utf-8') as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split('#', 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition('=')
            key = key.strip()
            if not sep or not key:
                raise ConfigError(f"{path}:{lineno}: ligne invalide (attendu clé = valeur): {raw.strip()}")
            values[key] = value.strip()
    return values


def _expected_type(schema, key):
    for f in schema.fields.values():
        if f.data_key == key:
            for kind, name in _TYPE_NAMES.items():
                if isinstance(f, kind):
                    return name
            return 'valeur'
    return None


def _translate(error, schema):
    """ValidationError marshmallow -> ConfigError nommant la clé"""
    messages = error.normalized_messages()
    key = sorted(messages)[0]
    detail = messages[key]
    detail = detail[0] if isinstance(detail, list) else detail
    expected = _expected_type(schema, key)
    if expected is None:
        return ConfigError(f"clé inconnue: {key}", key=key)
    return ConfigError(f"{key}: {detail} (type attendu: {expected})", key=key)


def parse_config(command, path=None, flags=None, profile=None, quick=False):
    """
    Résout la configuration d'une commande.

    Args:
        command: 'simulate', 'mpc', 'bench' ou 'validate'
        path: fichier de configuration optionnel
        flags: dict clé pointée -> valeur, prioritaire sur le fichier
        profile: nom de profil Config ('reference', 'quick')

    Raises:
        ConfigError: commande ou clé inconnue, type incorrect, valeur hors domaine
    """
    if command not in COMMANDS:
        raise ConfigError(f"commande inconnue: {command}", key='command')
    cfg = get_config(profile or ('quick' if quick else None))
    values = {}
    sources = {}
    if path:
        try:
            file_values = read_config_file(path)
        except OSError as e:
            raise ConfigError(f"fichier de configuration illisible: {path} ({e})", key='config') from e
        values.update(file_values)
        sources.update({k: 'file' for k in file_values})
    for key, value in (flags or {}).items():
        if value is not None:
            values[key] = value
            sources[key] = 'flag'

    values.setdefault('scene.name', COMMAND_SCENES[command])
    schema = _schema_for(cfg)(unknown=RAISE)
    try:
        loaded = schema.load(values)
    except ValidationError as e:
        raise _translate(e, schema) from e
    logger.debug(f"configuration {command}: {len(values)} clé(s) fournie(s), profil {cfg.__name__}")
    return RunConfig(command=command, quick=quick, profile=cfg, sources=sources, **loaded)
