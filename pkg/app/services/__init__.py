"""
계산 서비스 모듈
"""
