import os

from dotenv import load_dotenv

load_dotenv()


class Config:
    """Configuration de base du moteur"""

    # Environnement
    LOG_LEVEL = os.environ.get('CFM_LOG_LEVEL') or 'INFO'
    OUTPUT_DIR = os.environ.get('CFM_OUTPUT_DIR') or 'runs'
    WORKERS = int(os.environ.get('CFM_WORKERS') or 1)

    # Physique
    GRAVITY = 9.81

    # Géométrie de contact
    N_D = 4
    CONTACT_MARGIN = 0.01
    MAX_CONTACTS_PER_PAIR = 4

    # Modèle de contact
    STIFFNESS = 1.0
    DAMPING = 0.0
    # Raideur et amortissement par ligne (N/m, N·s/m) des scènes du cube dynamique
    CUBE_STIFFNESS = 50.0
    CUBE_DAMPING = 0.2
    SOFTPLUS_GAMMA = 100.0
    DUAL_REGULARIZATION = 1e-6
    QP_JITTER = 1e-10

    # MPC
    MPC_HORIZON = 4
    MPC_U_BOUND = 0.005
    MPC_MAX_ITER = 50
    MPC_TOLERANCE = 1e-6
    MPC_ROLLOUT_CAP = 2000
    MPC_SUCCESS_WINDOW = 20

    # Poids des coûts (contact, saisie, commande, position, orientation)
    W_CONTACT = 1.0
    W_GRASP = 0.05
    W_CONTROL = 50.0
    W_POSITION = 5000.0
    W_ORIENTATION = 50.0

    # Benchmark
    BENCH_REPETITIONS = 3

    @staticmethod
    def init_app(level=None):
        """Retourne le niveau de log effectif"""
        return (level or Config.LOG_LEVEL).upper()


class ReferenceConfig(Config):
    """Configuration des essais complets"""
    MPC_ROLLOUT_CAP = 2000


class QuickConfig(Config):
    """Configuration courte pour les essais rapides"""
    MPC_ROLLOUT_CAP = 200
    BENCH_REPETITIONS = 2


config = {
    'reference': ReferenceConfig,
    'quick': QuickConfig,
    'default': ReferenceConfig
}


def get_config(name=None):
    """Résout un profil de configuration (argument, puis CFM_PROFILE)"""
    name = name or os.environ.get('CFM_PROFILE') or 'default'
    return config.get(name, config['default'])
