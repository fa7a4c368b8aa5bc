"""
Скрипт налаштування MARLVol
"""

import os
import shutil
import subprocess
import sys


def create_directories():
    """Створення папок для логів та артефактів"""
    for directory in ("logs", "outputs"):
        if not os.path.exists(directory):
            os.makedirs(directory)
            print(f"✅ Створено папку {directory}/")


def install_requirements():
    """Встановлення залежностей"""
    print("📦 Встановлення залежностей...")
    try:
        subprocess.check_call([sys.executable, "-m", "pip", "install", "-r", "requirements.txt"])
        print("✅ Залежності встановлені успішно")
    except subprocess.CalledProcessError:
        print("❌ Помилка встановлення залежностей")
        return False
    return True


def setup_env_file():
    """Налаштування .env файлу"""
    if os.path.exists(".env"):
        print("✅ Файл .env вже існує")
        return True
    if not os.path.exists(".env.example"):
        print("❌ Файл .env.example не знайдено")
        return False
    shutil.copy(".env.example", ".env")
    print("✅ Створено .env файл з шаблону")
    return True


SURFACES = {
    "configs/surface_flat20.json": ["--kind", "flat", "--vol", "0.2"],
    "configs/surface_equity.json": ["--kind", "equity"],
}


def ensure_surfaces():
    """Синтетичні поверхні для конфігурацій з configs/, якщо їх немає"""
    for path, flags in SURFACES.items():
        if os.path.exists(path):
            continue
        try:
            subprocess.check_call([sys.executable, "main.py", "make-surface", *flags, "--out", path])
            print(f"✅ Згенеровано {path}")
        except subprocess.CalledProcessError:
            print(f"❌ Не вдалося згенерувати {path}")
            return False
    return True


def main():
    """Головна функція налаштування"""
    print("📈 Налаштування MARLVol")
    print("=" * 40)

    create_directories()

    if "--skip-install" not in sys.argv and not install_requirements():
        sys.exit(1)

    if not setup_env_file():
        sys.exit(1)

    if not ensure_surfaces():
        sys.exit(1)

    print("\n🎉 Налаштування завершено!")
    print("🚀 Запустіть калібрування: python main.py calibrate-vanilla --config configs/vanilla_flat.json --scale 6")


if __name__ == "__main__":
    main()
